#include <gtest/gtest.h>

#include "support.hpp"
#include "wmr/discriminator.hpp"
#include "wmr/errors.hpp"

namespace wmr {
namespace {

using testing::central_difference;
using testing::random_tensor;
using testing::relative_error;

// Output side of the documented layer stack, written out layer by layer.
int map_side_oracle(int side, int strided_layers) {
  for (int i = 0; i < strided_layers; ++i) side = (side + 2 * 1 - 4) / 2 + 1;
  side = (side + 2 - 4) / 1 + 1;  // unit-stride trunk layer
  side = (side + 2 - 4) / 1 + 1;  // logit layer
  return side;
}

// Receptive field walked backwards from one output entry: r <- (r - 1) * s + k.
int receptive_field_oracle(int strided_layers) {
  int r = 1;
  r = (r - 1) * 1 + 4;
  r = (r - 1) * 1 + 4;
  for (int i = 0; i < strided_layers; ++i) r = (r - 1) * 2 + 4;
  return r;
}

DiscriminatorConfig tiny(DiscriminatorKind kind, bool conditional = true) {
  DiscriminatorConfig cfg;
  cfg.kind = kind;
  cfg.base_channels = 4;
  cfg.n_layers = 2;
  cfg.conditional = conditional;
  return cfg;
}

TEST(Discriminator, DefaultMapArithmetic) {
  const DiscriminatorConfig cfg;
  EXPECT_EQ(map_side_oracle(256, 3), 30);
  EXPECT_EQ(receptive_field_oracle(3), 70);
  EXPECT_EQ(score_map_side(cfg, 256), 30);
  EXPECT_EQ(patch_receptive_field(cfg), 70);
  EXPECT_EQ(cfg.in_channels(), 6);
  EXPECT_EQ(cfg.layer_channels(0), 64);
  EXPECT_EQ(cfg.layer_channels(2), 256);
  EXPECT_EQ(cfg.layer_channels(3), 512);
}

TEST(Discriminator, MapSizeSweep) {
  for (int layers : {1, 2, 3, 4}) {
    DiscriminatorConfig cfg;
    cfg.n_layers = layers;
    EXPECT_EQ(patch_receptive_field(cfg), receptive_field_oracle(layers));
    for (int side : {64, 128, 256}) {
      EXPECT_EQ(score_map_side(cfg, side), map_side_oracle(side, layers));
    }
  }
}

TEST(Discriminator, ForwardMapShapeMatchesArithmetic) {
  RngStream rng(1);
  for (int side : {64, 128, 256}) {
    DiscriminatorConfig cfg;
    cfg.base_channels = 2;
    const DiscriminatorParams p = init_discriminator(cfg, RngStream(2));
    const nn::Tensor c = random_tensor({1, 3, side, side}, rng);
    const nn::Tensor y = random_tensor({1, 3, side, side}, rng);
    const PatchScoreMap map = discriminator_forward(p, c, y);
    const int s = map_side_oracle(side, 3);
    EXPECT_EQ(map.probabilities.shape(), (nn::Shape{1, 1, s, s}));
    EXPECT_EQ(map.receptive_field, 70);
    for (double v : map.probabilities.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Discriminator, UnconditionalMapShape) {
  DiscriminatorConfig cfg;
  cfg.base_channels = 2;
  cfg.conditional = false;
  const DiscriminatorParams p = init_discriminator(cfg, RngStream(3));
  EXPECT_EQ(p.tensors[p.tensors.index_of("layer0.weight")].shape().c, 3);
  RngStream rng(4);
  const PatchScoreMap map = unconditional_forward(p, random_tensor({1, 3, 256, 256}, rng));
  EXPECT_EQ(map.probabilities.shape(), (nn::Shape{1, 1, 30, 30}));
  EXPECT_THROW((void)discriminator_forward(p, nn::Tensor({1, 3, 256, 256}),
                                           nn::Tensor({1, 3, 256, 256})),
               ConfigError);
}

TEST(Discriminator, ZeroOutputLayerGivesOneHalf) {
  for (bool conditional : {true, false}) {
    DiscriminatorParams p =
        init_discriminator(tiny(DiscriminatorKind::patch, conditional), RngStream(5));
    p.tensors[p.tensors.index_of("out.weight")].fill(0.0);
    p.tensors[p.tensors.index_of("out.bias")].fill(0.0);
    RngStream rng(6);
    const nn::Tensor y = random_tensor({2, 3, 32, 32}, rng);
    const PatchScoreMap map = conditional
                                  ? discriminator_forward(p, random_tensor({2, 3, 32, 32}, rng), y)
                                  : unconditional_forward(p, y);
    for (double v : map.probabilities.data()) EXPECT_EQ(v, 0.5);
    EXPECT_EQ(aggregate_real_probability(map), 0.5);
  }
}

TEST(Discriminator, ImageKindGivesOneProbabilityPerSample) {
  DiscriminatorConfig cfg = tiny(DiscriminatorKind::image);
  const DiscriminatorParams p = init_discriminator(cfg, RngStream(7));
  RngStream rng(8);
  const PatchScoreMap map =
      discriminator_forward(p, random_tensor({3, 3, 32, 32}, rng), random_tensor({3, 3, 32, 32}, rng));
  EXPECT_EQ(map.probabilities.shape(), (nn::Shape{3, 1, 1, 1}));
  EXPECT_EQ(map.receptive_field, 32);

  // Same trunk as the patch kind, so comparable parameter counts.
  const DiscriminatorParams patch = init_discriminator(tiny(DiscriminatorKind::patch), RngStream(7));
  EXPECT_EQ(p.tensors.size(), patch.tensors.size());
}

TEST(Discriminator, ConditionSensitivity) {
  const DiscriminatorParams p = init_discriminator(tiny(DiscriminatorKind::patch), RngStream(9));
  RngStream rng(10);
  const nn::Tensor y = random_tensor({1, 3, 32, 32}, rng);
  const nn::Tensor c1 = random_tensor({1, 3, 32, 32}, rng);
  const nn::Tensor c2 = random_tensor({1, 3, 32, 32}, rng);
  EXPECT_NE(discriminator_forward(p, c1, y).probabilities,
            discriminator_forward(p, c2, y).probabilities);
}

TEST(Discriminator, ShapeErrors) {
  const DiscriminatorParams p = init_discriminator(tiny(DiscriminatorKind::patch), RngStream(1));
  EXPECT_THROW((void)discriminator_forward(p, nn::Tensor({1, 3, 32, 32}), nn::Tensor({1, 3, 16, 16})),
               ShapeError);
  EXPECT_THROW((void)discriminator_logits(p, nn::Tensor({1, 3, 32, 32})), ShapeError);
  EXPECT_THROW((void)discriminator_logits(p, nn::Tensor({1, 6, 4, 4})), ShapeError);
  DiscriminatorConfig bad;
  bad.n_layers = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW((void)parse_discriminator_kind("pixel"), ConfigError);
  EXPECT_EQ(parse_discriminator_kind("patch-based"), DiscriminatorKind::patch);
  EXPECT_EQ(parse_discriminator_kind("image-based"), DiscriminatorKind::image);
}

TEST(Discriminator, AggregateIsTheMean) {
  PatchScoreMap two;
  two.probabilities = nn::Tensor({1, 1, 1, 2});
  two.probabilities.data()[0] = 0.2;
  two.probabilities.data()[1] = 0.8;
  EXPECT_DOUBLE_EQ(aggregate_real_probability(two), 0.5);

  RngStream rng(11);
  PatchScoreMap map;
  map.probabilities = random_tensor({1, 1, 30, 30}, rng, 0.0, 1.0);
  double brute = 0.0;
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) brute += map.probabilities(0, 0, y, x);
  EXPECT_NEAR(aggregate_real_probability(map), brute / 900.0, 1e-12);

  // Permutation invariance.
  PatchScoreMap shuffled = map;
  auto d = shuffled.probabilities.data();
  std::reverse(d.begin(), d.end());
  EXPECT_NEAR(aggregate_real_probability(shuffled), aggregate_real_probability(map), 1e-15);

  EXPECT_THROW((void)aggregate_real_probability(PatchScoreMap{}), ShapeError);
}

class DiscriminatorGradient : public ::testing::TestWithParam<DiscriminatorKind> {};

TEST_P(DiscriminatorGradient, MatchesFiniteDifferences) {
  DiscriminatorParams p = init_discriminator(tiny(GetParam()), RngStream(12));
  RngStream rng(13);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    for (double& v : p.tensors[i].data()) {
      v = p.tensors.name(i).ends_with(".weight") ? rng.normal() * 0.3 : v + rng.normal() * 0.1;
    }
  }
  nn::Tensor input = random_tensor({2, 6, 16, 16}, rng);
  DiscriminatorTape tape;
  const nn::Tensor logits = discriminator_logits(p, input, &tape);
  const nn::Tensor r = random_tensor(logits.shape(), rng);
  nn::ParamSet grads = p.tensors.zeros_like();
  const nn::Tensor dinput = discriminator_backward(p, tape, r, grads);

  auto loss = [&] {
    const nn::Tensor z = discriminator_logits(p, input);
    double s = 0.0;
    for (std::size_t i = 0; i < z.numel(); ++i) s += z.data()[i] * r.data()[i];
    return s;
  };
  for (std::size_t k = 0; k < p.tensors.size(); ++k) {
    for (std::size_t i = 0; i < p.tensors[k].numel(); ++i) {
      const double num = central_difference(loss, &p.tensors[k].data()[i]);
      ASSERT_LT(relative_error(num, grads[k].data()[i], 1e-4), 1e-3)
          << p.tensors.name(k) << "[" << i << "] numeric " << num << " analytic "
          << grads[k].data()[i];
    }
  }
  for (std::size_t i = 0; i < input.numel(); i += 5) {
    const double num = central_difference(loss, &input.data()[i]);
    ASSERT_LT(relative_error(num, dinput.data()[i], 1e-4), 1e-3) << "input " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, DiscriminatorGradient,
                         ::testing::Values(DiscriminatorKind::patch, DiscriminatorKind::image));

}  // namespace
}  // namespace wmr
