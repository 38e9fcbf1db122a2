#include "wmr/generator.hpp"

#include <algorithm>
#include <string>

#include "wmr/errors.hpp"

namespace wmr {

namespace {

constexpr double kLeakySlope = 0.2;
constexpr double kInitStd = 0.02;
const nn::ConvGeometry kBlockGeometry{4, 2, 1};

std::string down_name(int i) { return "down" + std::to_string(i); }
std::string up_name(int k) { return "up" + std::to_string(k); }

// The outermost encoder block and the bottleneck carry no normalization: the
// bottleneck can be 1x1, where per-instance statistics would zero it out.
bool down_normalized(const GeneratorConfig& cfg, int i) { return i != 0 && i != cfg.depth - 1; }
bool up_normalized(const GeneratorConfig& cfg, int k) { return k != cfg.depth - 1; }

struct BlockRefs {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t gamma = 0;
  std::size_t beta = 0;
  bool normalized = false;
};

BlockRefs refs(const nn::ParamSet& p, const std::string& prefix, bool normalized) {
  BlockRefs r;
  r.normalized = normalized;
  r.weight = p.index_of(prefix + ".weight");
  if (normalized) {
    r.gamma = p.index_of(prefix + ".gamma");
    r.beta = p.index_of(prefix + ".beta");
  } else {
    r.bias = p.index_of(prefix + ".bias");
  }
  return r;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (depth < 1) throw ConfigError("generator depth must be >= 1");
  if (depth > 16) throw ConfigError("generator depth too large");
  if (base_channels < 1 || max_channels < base_channels) {
    throw ConfigError("generator channel counts invalid");
  }
  if (in_channels < 1 || out_channels < 1) throw ConfigError("generator io channels invalid");
  if (input_side < 2 || input_side % (1 << depth) != 0) {
    throw ConfigError("generator input_side " + std::to_string(input_side) +
                      " must be divisible by 2^depth = " + std::to_string(1 << depth));
  }
}

int GeneratorConfig::encoder_channels(int block) const {
  long long ch = static_cast<long long>(base_channels) << block;
  return static_cast<int>(std::min<long long>(ch, max_channels));
}

GeneratorLayout generator_layout(const GeneratorConfig& cfg) {
  cfg.validate();
  GeneratorLayout layout;
  int side = cfg.input_side;
  int in = cfg.in_channels;
  for (int i = 0; i < cfg.depth; ++i) {
    const int out = cfg.encoder_channels(i);
    layout.down.push_back({in, out, side, side / 2, down_normalized(cfg, i)});
    in = out;
    side /= 2;
  }
  for (int k = 0; k < cfg.depth; ++k) {
    const int skip = cfg.depth - 1 - k;
    const int in_ch = k == 0 ? cfg.encoder_channels(cfg.depth - 1)
                             : cfg.encoder_channels(skip) + cfg.encoder_channels(skip);
    const int out_ch = k == cfg.depth - 1 ? cfg.out_channels : cfg.encoder_channels(skip - 1);
    layout.up.push_back({in_ch, out_ch, side, side * 2, up_normalized(cfg, k)});
    side *= 2;
  }
  return layout;
}

GeneratorParams init_generator(const GeneratorConfig& cfg, RngStream rng) {
  const GeneratorLayout layout = generator_layout(cfg);
  GeneratorParams params{cfg, {}};
  auto normal_tensor = [&rng](nn::Shape s) {
    nn::Tensor t(s);
    for (double& v : t.data()) v = kInitStd * rng.normal();
    return t;
  };
  auto add_block = [&](const std::string& prefix, nn::Shape weight_shape, int out,
                       bool normalized) {
    params.tensors.add(prefix + ".weight", normal_tensor(weight_shape));
    if (normalized) {
      params.tensors.add(prefix + ".gamma", nn::Tensor(nn::Shape{1, out, 1, 1}, 1.0));
      params.tensors.add(prefix + ".beta", nn::Tensor(nn::Shape{1, out, 1, 1}, 0.0));
    } else {
      params.tensors.add(prefix + ".bias", nn::Tensor(nn::Shape{1, out, 1, 1}, 0.0));
    }
  };
  for (int i = 0; i < cfg.depth; ++i) {
    const BlockLayout& b = layout.down[static_cast<std::size_t>(i)];
    add_block(down_name(i), nn::Shape{b.out_channels, b.in_channels, 4, 4}, b.out_channels,
              b.normalized);
  }
  for (int k = 0; k < cfg.depth; ++k) {
    const BlockLayout& b = layout.up[static_cast<std::size_t>(k)];
    // Transposed convolution weights are [Cin, Cout, K, K].
    add_block(up_name(k), nn::Shape{b.in_channels, b.out_channels, 4, 4}, b.out_channels,
              b.normalized);
  }
  return params;
}

nn::Tensor generator_forward(const GeneratorParams& params, const nn::Tensor& x,
                             GeneratorTape* tape, const GeneratorForwardOptions& options) {
  const GeneratorConfig& cfg = params.config;
  const nn::Shape xs = x.shape();
  if (xs.c != cfg.in_channels || xs.h != cfg.input_side || xs.w != cfg.input_side) {
    throw ShapeError("generator expects Nx" + std::to_string(cfg.in_channels) + "x" +
                     std::to_string(cfg.input_side) + "x" + std::to_string(cfg.input_side) +
                     ", got " + nn::to_string(xs));
  }
  if (options.zeroed_skip >= cfg.depth - 1) {
    throw ConfigError("zeroed_skip must name an encoder block that feeds a skip connection");
  }
  const nn::ParamSet& p = params.tensors;
  const nn::Tensor empty_bias;
  if (tape) {
    tape->down.assign(static_cast<std::size_t>(cfg.depth), {});
    tape->up.assign(static_cast<std::size_t>(cfg.depth), {});
    tape->zeroed_skip = options.zeroed_skip;
  }

  std::vector<nn::Tensor> enc;
  enc.reserve(static_cast<std::size_t>(cfg.depth));
  const nn::Tensor* cur = &x;
  for (int i = 0; i < cfg.depth; ++i) {
    const BlockRefs r = refs(p, down_name(i), down_normalized(cfg, i));
    nn::Tensor z;
    if (r.normalized) {
      const nn::Tensor zero_bias(nn::Shape{1, p[r.weight].shape().n, 1, 1});
      z = nn::conv2d(*cur, p[r.weight], zero_bias, kBlockGeometry);
    } else {
      z = nn::conv2d(*cur, p[r.weight], p[r.bias], kBlockGeometry);
    }
    nn::NormCache cache;
    nn::Tensor pre = r.normalized
                         ? nn::instance_norm(z, p[r.gamma], p[r.beta], tape ? &cache : nullptr)
                         : std::move(z);
    enc.push_back(nn::leaky_relu(pre, kLeakySlope));
    if (tape) {
      auto& blk = tape->down[static_cast<std::size_t>(i)];
      blk.input = *cur;
      blk.pre_activation = std::move(pre);
      blk.norm = std::move(cache);
    }
    cur = &enc.back();
  }

  nn::Tensor h;
  for (int k = 0; k < cfg.depth; ++k) {
    const int skip = cfg.depth - 1 - k;
    nn::Tensor in;
    if (k == 0) {
      in = enc.back();
    } else if (skip == options.zeroed_skip) {
      nn::Tensor zeros(enc[static_cast<std::size_t>(skip)].shape());
      in = nn::concat_channels(h, zeros);
    } else {
      in = nn::concat_channels(h, enc[static_cast<std::size_t>(skip)]);
    }
    const BlockRefs r = refs(p, up_name(k), up_normalized(cfg, k));
    nn::Tensor z;
    if (r.normalized) {
      const nn::Tensor zero_bias(nn::Shape{1, p[r.weight].shape().c, 1, 1});
      z = nn::conv_transpose2d(in, p[r.weight], zero_bias, kBlockGeometry);
    } else {
      z = nn::conv_transpose2d(in, p[r.weight], p[r.bias], kBlockGeometry);
    }
    nn::NormCache cache;
    nn::Tensor pre = r.normalized
                         ? nn::instance_norm(z, p[r.gamma], p[r.beta], tape ? &cache : nullptr)
                         : std::move(z);
    h = k == cfg.depth - 1 ? nn::tanh(pre) : nn::leaky_relu(pre, 0.0);
    if (tape) {
      auto& blk = tape->up[static_cast<std::size_t>(k)];
      blk.input = std::move(in);
      blk.pre_activation = std::move(pre);
      blk.norm = std::move(cache);
    }
  }
  if (tape) tape->output = h;
  return h;
}

nn::Tensor generator_backward(const GeneratorParams& params, const GeneratorTape& tape,
                              const nn::Tensor& dy, nn::ParamSet& grads) {
  const GeneratorConfig& cfg = params.config;
  const nn::ParamSet& p = params.tensors;
  if (!grads.same_layout(p)) throw ShapeError("gradient set does not match generator parameters");

  std::vector<nn::Tensor> denc(static_cast<std::size_t>(cfg.depth));
  nn::Tensor g = dy;
  for (int k = cfg.depth - 1; k >= 0; --k) {
    const auto& blk = tape.up[static_cast<std::size_t>(k)];
    const BlockRefs r = refs(p, up_name(k), up_normalized(cfg, k));
    nn::Tensor dpre = k == cfg.depth - 1 ? nn::tanh_backward(tape.output, g)
                                         : nn::leaky_relu_backward(blk.pre_activation, g, 0.0);
    nn::Tensor dz;
    if (r.normalized) {
      nn::instance_norm_backward(blk.norm, p[r.gamma], dpre, &dz, &grads[r.gamma], &grads[r.beta]);
    } else {
      dz = std::move(dpre);
    }
    nn::Tensor din;
    nn::conv_transpose2d_backward(blk.input, p[r.weight], kBlockGeometry, dz, &din,
                                  &grads[r.weight], r.normalized ? nullptr : &grads[r.bias]);
    const int skip = cfg.depth - 1 - k;
    if (k == 0) {
      denc[static_cast<std::size_t>(cfg.depth - 1)] = std::move(din);
    } else {
      const int dec_channels = din.shape().c - cfg.encoder_channels(skip);
      auto [ddec, dskip] = nn::split_channels(din, dec_channels);
      if (skip != tape.zeroed_skip) denc[static_cast<std::size_t>(skip)] = std::move(dskip);
      g = std::move(ddec);
    }
  }

  nn::Tensor from_above;
  for (int i = cfg.depth - 1; i >= 0; --i) {
    const auto& blk = tape.down[static_cast<std::size_t>(i)];
    nn::Tensor gi = std::move(denc[static_cast<std::size_t>(i)]);
    if (gi.numel() == 0) gi = nn::Tensor(blk.pre_activation.shape());
    if (from_above.numel() != 0) gi += from_above;
    const BlockRefs r = refs(p, down_name(i), down_normalized(cfg, i));
    nn::Tensor dpre = nn::leaky_relu_backward(blk.pre_activation, gi, kLeakySlope);
    nn::Tensor dz;
    if (r.normalized) {
      nn::instance_norm_backward(blk.norm, p[r.gamma], dpre, &dz, &grads[r.gamma], &grads[r.beta]);
    } else {
      dz = std::move(dpre);
    }
    nn::Tensor din;
    nn::conv2d_backward(blk.input, p[r.weight], kBlockGeometry, dz, &din, &grads[r.weight],
                        r.normalized ? nullptr : &grads[r.bias]);
    from_above = std::move(din);
  }
  return from_above;
}

}  // namespace wmr
