#include "wmr/feature_extractor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "wmr/errors.hpp"
#include "wmr/ops.hpp"
#include "wmr/rng.hpp"

namespace wmr {

namespace {

constexpr char kMagic[8] = {'W', 'M', 'R', 'F', 'X', '0', '0', '1'};
constexpr int kLayers = 4;
const nn::ConvGeometry kConv3{3, 1, 1};

// ImageNet statistics used by the pretrained reference weights.
constexpr std::array<double, 3> kImagenetMean{0.485, 0.456, 0.406};
constexpr std::array<double, 3> kImagenetStd{0.229, 0.224, 0.225};

std::string weight_name(int i) { return "conv" + std::to_string(i) + ".weight"; }
std::string bias_name(int i) { return "conv" + std::to_string(i) + ".bias"; }

static_assert(std::endian::native == std::endian::little, "extractor files are little endian");

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated extractor file " + path.string());
  return v;
}

}  // namespace

std::string to_string(ExtractorProvenance p) {
  switch (p) {
    case ExtractorProvenance::pretrained_asset: return "pretrained-asset";
    case ExtractorProvenance::fixed_random: return "fixed-random";
    case ExtractorProvenance::identity: return "identity";
  }
  return "unknown";
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

FeatureExtractor FeatureExtractor::identity() {
  FeatureExtractor fx;
  fx.provenance_ = ExtractorProvenance::identity;
  return fx;
}

FeatureExtractor FeatureExtractor::fixed_random(int width1, int width2, std::uint64_t seed) {
  if (width1 < 1 || width2 < 1) throw ConfigError("extractor widths must be positive");
  FeatureExtractor fx;
  fx.provenance_ = ExtractorProvenance::fixed_random;
  RngStream rng = RngStream(seed).derive("extractor");
  const int ins[kLayers] = {3, width1, width1, width2};
  const int outs[kLayers] = {width1, width1, width2, width2};
  for (int i = 0; i < kLayers; ++i) {
    nn::Tensor w(nn::Shape{outs[i], ins[i], 3, 3});
    const double std = std::sqrt(2.0 / (ins[i] * 9.0));
    for (double& v : w.data()) v = std * rng.normal();
    fx.weights_.add(weight_name(i), std::move(w));
    fx.weights_.add(bias_name(i), nn::Tensor(nn::Shape{1, outs[i], 1, 1}));
  }
  return fx;
}

FeatureExtractor FeatureExtractor::from_file(const std::filesystem::path& path,
                                             const std::string& expected_sha256) {
  if (!std::filesystem::is_regular_file(path)) {
    throw FileNotFoundError("extractor weights not found: " + path.string());
  }
  const std::string actual = sha256_file(path);
  if (expected_sha256.empty()) {
    throw ConfigError("extractor asset " + path.string() + " needs an expected sha256 (file has " +
                      actual + ")");
  }
  if (actual != expected_sha256) {
    throw DataError("extractor checksum mismatch for " + path.string() + ": expected " +
                    expected_sha256 + ", got " + actual);
  }
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("not an extractor weight file: " + path.string());
  }
  const auto count = read_pod<std::uint32_t>(in, path);
  if (count != kLayers) throw DataError("extractor file must hold 4 convolution layers");

  FeatureExtractor fx;
  fx.provenance_ = ExtractorProvenance::pretrained_asset;
  fx.mean_ = kImagenetMean;
  fx.std_ = kImagenetStd;
  fx.checksum_ = actual;
  int prev_out = 3;
  for (int i = 0; i < kLayers; ++i) {
    const auto cout = static_cast<int>(read_pod<std::uint32_t>(in, path));
    const auto cin = static_cast<int>(read_pod<std::uint32_t>(in, path));
    const auto kh = static_cast<int>(read_pod<std::uint32_t>(in, path));
    const auto kw = static_cast<int>(read_pod<std::uint32_t>(in, path));
    if (kh != 3 || kw != 3 || cin != prev_out || cout < 1 || cout > 4096) {
      throw DataError("unexpected layer shape in extractor file " + path.string());
    }
    nn::Tensor w(nn::Shape{cout, cin, 3, 3});
    for (double& v : w.data()) v = read_pod<float>(in, path);
    nn::Tensor b(nn::Shape{1, cout, 1, 1});
    for (double& v : b.data()) v = read_pod<float>(in, path);
    fx.weights_.add(weight_name(i), std::move(w));
    fx.weights_.add(bias_name(i), std::move(b));
    prev_out = cout;
  }
  return fx;
}

FeatureExtractor FeatureExtractor::from_config(const ExtractorConfig& cfg) {
  switch (cfg.provenance) {
    case ExtractorProvenance::pretrained_asset: return from_file(cfg.asset_path, cfg.sha256);
    case ExtractorProvenance::fixed_random: return fixed_random(cfg.width1, cfg.width2, cfg.seed);
    case ExtractorProvenance::identity: return identity();
  }
  throw ConfigError("unknown extractor provenance");
}

nn::Tensor FeatureExtractor::features(const nn::Tensor& x, ExtractorTape* tape) const {
  if (provenance_ == ExtractorProvenance::identity) return x;
  const nn::Shape s = x.shape();
  if (s.c != 3) throw ShapeError("extractor expects 3-channel input, got " + nn::to_string(s));
  if (s.h < 2 || s.w < 2) throw ShapeError("extractor input too small: " + nn::to_string(s));

  nn::Tensor h(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < 3; ++c) {
      const double* src = x.plane(n, c);
      double* dst = h.plane(n, c);
      const double scale = 0.5 / std_[static_cast<std::size_t>(c)];
      const double shift = (0.5 - mean_[static_cast<std::size_t>(c)]) / std_[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < s.plane(); ++i) dst[i] = src[i] * scale + shift;
    }
  }
  if (tape) {
    tape->conv_inputs.clear();
    tape->pre_activations.clear();
  }
  for (int i = 0; i < kLayers; ++i) {
    if (i == 2) {
      if (tape) tape->pool_input = h.shape();
      h = nn::max_pool2(h, tape ? &tape->pool_argmax : nullptr);
    }
    nn::Tensor z = nn::conv2d(h, weights_[static_cast<std::size_t>(2 * i)],
                              weights_[static_cast<std::size_t>(2 * i + 1)], kConv3);
    nn::Tensor a = nn::leaky_relu(z, 0.0);
    if (tape) {
      tape->conv_inputs.push_back(std::move(h));
      tape->pre_activations.push_back(std::move(z));
    }
    h = std::move(a);
  }
  return h;
}

nn::Tensor FeatureExtractor::backward(const ExtractorTape& tape, const nn::Tensor& dfeatures) const {
  if (provenance_ == ExtractorProvenance::identity) return dfeatures;
  nn::Tensor g = dfeatures;
  for (int i = kLayers - 1; i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    nn::Tensor dz = nn::leaky_relu_backward(tape.pre_activations[idx], g, 0.0);
    nn::conv2d_backward(tape.conv_inputs[idx], weights_[2 * idx], kConv3, dz, &g, nullptr, nullptr);
    if (i == 2) g = nn::max_pool2_backward(tape.pool_input, tape.pool_argmax, g);
  }
  const nn::Shape s = g.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < 3; ++c) {
      double* p = g.plane(n, c);
      const double scale = 0.5 / std_[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] *= scale;
    }
  }
  return g;
}

void write_extractor_file(const std::filesystem::path& path, const nn::ParamSet& weights) {
  if (weights.size() != 2 * kLayers) throw ConfigError("extractor weights must hold 4 layers");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, 8);
  const std::uint32_t count = kLayers;
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (std::size_t i = 0; i < kLayers; ++i) {
    const nn::Shape s = weights[2 * i].shape();
    const std::uint32_t dims[4] = {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
                                   static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (double v : weights[2 * i].data()) {
      const auto f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
    for (double v : weights[2 * i + 1].data()) {
      const auto f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace wmr
