#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "wmr/errors.hpp"
#include "wmr/losses.hpp"
#include "wmr/ops.hpp"

namespace wmr {
namespace {

using testing::central_difference;
using testing::random_tensor;
using testing::relative_error;

nn::Tensor filled(nn::Shape s, double v) { return nn::Tensor(s, v); }

TEST(Losses, DefaultWeights) {
  const LossWeights w;
  EXPECT_EQ(w.alpha, 10.0);
  EXPECT_EQ(w.beta, 1e-4);
  EXPECT_THROW((LossWeights{-1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((LossWeights{0.0, std::nan("")}.validate()), ConfigError);
}

TEST(Losses, L1Examples) {
  RngStream rng(1);
  const nn::Tensor a = random_tensor({2, 3, 4, 5}, rng);
  EXPECT_EQ(l1_loss(a, a), 0.0);

  nn::Tensor b = a;
  for (double& v : b.data()) v += 0.125;
  EXPECT_NEAR(l1_loss(a, b), 0.125, 1e-12);

  const nn::Tensor c = random_tensor(a.shape(), rng);
  double brute = 0.0;
  for (int n = 0; n < 2; ++n)
    for (int ch = 0; ch < 3; ++ch)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) brute += std::abs(a(n, ch, y, x) - c(n, ch, y, x));
  EXPECT_NEAR(l1_loss(a, c), brute / 120.0, 1e-12);
  EXPECT_GE(l1_loss(a, c), 0.0);
  EXPECT_THROW((void)l1_loss(a, nn::Tensor({2, 3, 4, 4})), ShapeError);
}

TEST(Losses, PerceptualWithIdentityStub) {
  const FeatureExtractor stub = FeatureExtractor::identity();
  RngStream rng(2);
  const nn::Tensor a = random_tensor({1, 3, 4, 4}, rng);
  EXPECT_EQ(perceptual_loss(stub, a, a), 0.0);

  const double delta = 0.3;
  nn::Tensor b = a;
  for (double& v : b.data()) v += delta;
  EXPECT_NEAR(perceptual_loss(stub, b, a), delta * delta, 1e-12);

  const nn::Tensor c = random_tensor(a.shape(), rng);
  const double base = perceptual_loss(stub, a, c);
  for (double s : {0.5, 2.0, 3.0}) {
    nn::Tensor as = a, cs = c;
    for (double& v : as.data()) v *= s;
    for (double& v : cs.data()) v *= s;
    EXPECT_NEAR(perceptual_loss(stub, as, cs), s * s * base, 1e-12);
  }

  // Normalization by C*H*W, averaged over the batch.
  double brute = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) brute += std::pow(a.data()[i] - c.data()[i], 2);
  EXPECT_NEAR(base, brute / (3 * 4 * 4), 1e-12);
  EXPECT_THROW((void)perceptual_loss(stub, a, nn::Tensor({1, 3, 4, 5})), ShapeError);
}

TEST(Losses, PerceptualNonNegativeWithRealExtractor) {
  const FeatureExtractor fx = FeatureExtractor::fixed_random(4, 8, 1);
  RngStream rng(3);
  const nn::Tensor a = random_tensor({1, 3, 8, 8}, rng);
  const nn::Tensor b = random_tensor({1, 3, 8, 8}, rng);
  EXPECT_EQ(perceptual_loss(fx, a, a), 0.0);
  EXPECT_GT(perceptual_loss(fx, a, b), 0.0);
}

TEST(Losses, AdversarialDExamples) {
  const nn::Shape s{1, 1, 3, 3};
  const double eps = kProbabilityEpsilon;
  EXPECT_NEAR(adversarial_d_loss(filled(s, 1 - eps), filled(s, eps)), 0.0, 1e-6);
  EXPECT_NEAR(adversarial_d_loss(filled(s, 0.5), filled(s, 0.5)), 2.0 * std::numbers::ln2, 1e-10);
  EXPECT_NEAR(adversarial_d_loss(filled(s, 0.5), filled(s, 0.5)), 1.3863, 1e-4);
  EXPECT_NEAR(adversarial_d_loss(filled(s, 0.9), filled(s, 0.1)), -2.0 * std::log(0.9), 1e-10);
  EXPECT_NEAR(adversarial_d_loss(filled(s, 0.9), filled(s, 0.1)), 0.2107, 1e-4);
  // Clamping keeps the extremes finite.
  EXPECT_TRUE(std::isfinite(adversarial_d_loss(filled(s, 0.0), filled(s, 1.0))));
  EXPECT_NEAR(adversarial_d_loss(filled(s, 1.0), filled(s, 0.0)), -2.0 * std::log1p(-eps), 1e-15);
}

TEST(Losses, AdversarialGExamples) {
  const nn::Shape s{2, 1, 2, 2};
  EXPECT_NEAR(adversarial_g_loss(filled(s, 1 - kProbabilityEpsilon)), 0.0, 1e-6);
  EXPECT_NEAR(adversarial_g_loss(filled(s, 0.5)), std::numbers::ln2, 1e-10);
  EXPECT_NEAR(adversarial_g_loss(filled(s, 0.5)), 0.6931, 1e-4);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i < 100; ++i) {
    const double v = adversarial_g_loss(filled(s, i / 100.0));
    EXPECT_LT(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  // Mean over entries: {0.25, 1.0} averages the logs, not the probabilities.
  nn::Tensor mixed({1, 1, 1, 2});
  mixed.data()[0] = 0.25;
  mixed.data()[1] = 1.0 - kProbabilityEpsilon;
  EXPECT_NEAR(adversarial_g_loss(mixed), -(std::log(0.25) + std::log(1 - kProbabilityEpsilon)) / 2,
              1e-12);
}

TEST(Losses, TotalExamples) {
  EXPECT_EQ(total_generator_loss(0.42, 3.0, 9.0, {0.0, 0.0}), 0.42);
  EXPECT_NEAR(total_generator_loss(0.6931, 0.05, 10.0, {10.0, 1e-4}), 1.1941, 1e-10);
  EXPECT_THROW((void)total_generator_loss(std::nan(""), 0, 0, {}), NumericError);
  EXPECT_THROW((void)total_generator_loss(0, std::numeric_limits<double>::infinity(), 0, {}),
               NumericError);
}

TEST(Losses, L1GradientMatchesFiniteDifferences) {
  RngStream rng(4);
  nn::Tensor a = random_tensor({1, 2, 3, 3}, rng);
  const nn::Tensor b = random_tensor(a.shape(), rng);
  const nn::Tensor g = l1_loss_grad(a, b);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double num = central_difference([&] { return l1_loss(a, b); }, &a.data()[i]);
    EXPECT_LT(relative_error(num, g.data()[i]), 1e-6);
  }
}

TEST(Losses, PerceptualGradientMatchesFiniteDifferences) {
  const FeatureExtractor fx = FeatureExtractor::fixed_random(4, 6, 9);
  RngStream rng(5);
  nn::Tensor a = random_tensor({2, 3, 8, 8}, rng);
  const nn::Tensor b = random_tensor(a.shape(), rng);
  const LossAndGrad lg = perceptual_loss_with_grad(fx, a, b);
  EXPECT_NEAR(lg.value, perceptual_loss(fx, a, b), 1e-14);
  for (std::size_t i = 0; i < a.numel(); i += 3) {
    const double num =
        central_difference([&] { return perceptual_loss(fx, a, b); }, &a.data()[i], 1e-6);
    EXPECT_LT(relative_error(num, lg.grad.data()[i], 1e-6), 1e-3) << i;
  }
}

TEST(Losses, AdversarialLogitGradientsMatchFiniteDifferences) {
  RngStream rng(6);
  nn::Tensor zr = random_tensor({2, 1, 3, 3}, rng, -3.0, 3.0);
  nn::Tensor zf = random_tensor({2, 1, 3, 3}, rng, -3.0, 3.0);
  const nn::Tensor gr = adversarial_real_logit_grad(nn::sigmoid(zr));
  const nn::Tensor gf = adversarial_fake_logit_grad(nn::sigmoid(zf));
  const nn::Tensor gg = adversarial_g_logit_grad(nn::sigmoid(zf));
  auto d_loss = [&] { return adversarial_d_loss(nn::sigmoid(zr), nn::sigmoid(zf)); };
  auto g_loss = [&] { return adversarial_g_loss(nn::sigmoid(zf)); };
  for (std::size_t i = 0; i < zr.numel(); ++i) {
    EXPECT_LT(relative_error(central_difference(d_loss, &zr.data()[i]), gr.data()[i]), 1e-6);
    EXPECT_LT(relative_error(central_difference(d_loss, &zf.data()[i]), gf.data()[i]), 1e-6);
    EXPECT_LT(relative_error(central_difference(g_loss, &zf.data()[i]), gg.data()[i]), 1e-6);
  }
}

}  // namespace
}  // namespace wmr
