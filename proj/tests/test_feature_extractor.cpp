#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "wmr/errors.hpp"
#include "wmr/feature_extractor.hpp"

namespace wmr {
namespace {

using testing::central_difference;
using testing::random_tensor;
using testing::relative_error;
using testing::TempDir;

TEST(FeatureExtractor, IdentityPassesThrough) {
  RngStream rng(1);
  const nn::Tensor x = random_tensor({1, 3, 5, 5}, rng);
  const FeatureExtractor fx = FeatureExtractor::identity();
  EXPECT_EQ(fx.features(x), x);
  EXPECT_EQ(fx.provenance(), ExtractorProvenance::identity);
}

TEST(FeatureExtractor, FixedRandomIsSeededAndHalvesResolution) {
  const FeatureExtractor a = FeatureExtractor::fixed_random(8, 16, 7);
  const FeatureExtractor b = FeatureExtractor::fixed_random(8, 16, 7);
  const FeatureExtractor c = FeatureExtractor::fixed_random(8, 16, 8);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_NE(a.weights(), c.weights());
  RngStream rng(2);
  const nn::Tensor x = random_tensor({2, 3, 16, 12}, rng);
  const nn::Tensor f = a.features(x);
  EXPECT_EQ(f.shape(), (nn::Shape{2, 16, 8, 6}));
  for (double v : f.data()) EXPECT_GE(v, 0.0);
  EXPECT_THROW((void)a.features(nn::Tensor({1, 4, 8, 8})), ShapeError);
  EXPECT_THROW((void)FeatureExtractor::fixed_random(0, 4, 1), ConfigError);
}

TEST(FeatureExtractor, InputGradientMatchesFiniteDifferences) {
  const FeatureExtractor fx = FeatureExtractor::fixed_random(4, 6, 3);
  RngStream rng(4);
  nn::Tensor x = random_tensor({1, 3, 8, 8}, rng);
  ExtractorTape tape;
  const nn::Tensor f = fx.features(x, &tape);
  const nn::Tensor r = random_tensor(f.shape(), rng);
  const nn::Tensor dx = fx.backward(tape, r);
  auto loss = [&] {
    const nn::Tensor g = fx.features(x);
    double s = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) s += g.data()[i] * r.data()[i];
    return s;
  };
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double num = central_difference(loss, &x.data()[i], 1e-6);
    EXPECT_LT(relative_error(num, dx.data()[i], 1e-4), 1e-3) << i;
  }
}

TEST(FeatureExtractor, AssetRoundTripWithChecksum) {
  TempDir dir;
  const FeatureExtractor src = FeatureExtractor::fixed_random(4, 6, 5);
  write_extractor_file(dir / "fx.bin", src.weights());
  const std::string sha = sha256_file(dir / "fx.bin");
  EXPECT_EQ(sha.size(), 64u);

  const FeatureExtractor loaded = FeatureExtractor::from_file(dir / "fx.bin", sha);
  EXPECT_EQ(loaded.provenance(), ExtractorProvenance::pretrained_asset);
  EXPECT_EQ(loaded.checksum(), sha);
  ASSERT_EQ(loaded.weights().size(), src.weights().size());
  for (std::size_t k = 0; k < src.weights().size(); ++k) {
    for (std::size_t i = 0; i < src.weights()[k].numel(); ++i) {
      EXPECT_EQ(loaded.weights()[k].data()[i],
                static_cast<double>(static_cast<float>(src.weights()[k].data()[i])));
    }
  }

  ExtractorConfig cfg;
  cfg.provenance = ExtractorProvenance::pretrained_asset;
  cfg.asset_path = dir / "fx.bin";
  cfg.sha256 = sha;
  EXPECT_EQ(FeatureExtractor::from_config(cfg).weights(), loaded.weights());
}

TEST(FeatureExtractor, AssetErrors) {
  TempDir dir;
  EXPECT_THROW((void)FeatureExtractor::from_file(dir / "none.bin", "00"), FileNotFoundError);

  write_extractor_file(dir / "fx.bin", FeatureExtractor::fixed_random(2, 2, 1).weights());
  EXPECT_THROW((void)FeatureExtractor::from_file(dir / "fx.bin", ""), ConfigError);
  EXPECT_THROW((void)FeatureExtractor::from_file(dir / "fx.bin", std::string(64, '0')), DataError);

  std::ofstream(dir / "bad.bin") << "NOTMAGIC0000";
  EXPECT_THROW((void)FeatureExtractor::from_file(dir / "bad.bin", sha256_file(dir / "bad.bin")),
               DataError);
  {
    std::ofstream out(dir / "short.bin", std::ios::binary);
    out << "WMRFX001";
    const std::uint32_t n = 4;
    out.write(reinterpret_cast<const char*>(&n), 4);
  }
  EXPECT_THROW(
      (void)FeatureExtractor::from_file(dir / "short.bin", sha256_file(dir / "short.bin")),
      DataError);
}

TEST(FeatureExtractor, KnownDigest) {
  TempDir dir;
  std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file(dir / "abc.txt"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace wmr
