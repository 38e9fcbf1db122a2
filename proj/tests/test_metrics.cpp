#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "wmr/errors.hpp"
#include "wmr/metrics.hpp"

namespace wmr {
namespace {

using testing::random_image;

// Direct-summation SSIM: a full 2-D Gaussian weight table applied to every
// window position, statistics accumulated term by term.
double ssim_oracle(const Image& a, const Image& b) {
  constexpr int k = 11;
  constexpr double sigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double w[k][k];
  double wsum = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double di = i - 5, dj = j - 5;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      wsum += w[i][j];
    }
  double total = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y0 = 0; y0 + k <= a.height(); ++y0)
      for (int x0 = 0; x0 + k <= a.width(); ++x0) {
        double ma = 0, mb = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            ma += w[i][j] / wsum * a.at(c, y0 + i, x0 + j);
            mb += w[i][j] / wsum * b.at(c, y0 + i, x0 + j);
          }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double da = a.at(c, y0 + i, x0 + j) - ma;
            const double db = b.at(c, y0 + i, x0 + j) - mb;
            va += w[i][j] / wsum * da * da;
            vb += w[i][j] / wsum * db * db;
            cov += w[i][j] / wsum * da * db;
          }
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

TEST(Psnr, IdenticalIsInfinite) {
  RngStream rng(1);
  const Image a = random_image(8, 8, 3, rng);
  EXPECT_EQ(psnr(a, a), kPsnrIdentical);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_EQ(mse(a, a), 0.0);
}

TEST(Psnr, UniformOffsetValue) {
  Image a(6, 7, 3, 0.25);
  Image b = a;
  for (double& v : b.data()) v += 16.0 / 255.0;
  const double expected = 10.0 * std::log10((255.0 * 255.0) / (16.0 * 16.0));
  EXPECT_NEAR(psnr(a, b), expected, 1e-6);
  EXPECT_NEAR(psnr(a, b), 24.0484, 1e-4);
}

TEST(Psnr, SymmetryBoundsAndErrors) {
  RngStream rng(2);
  const Image a = random_image(9, 5, 3, rng);
  const Image b = random_image(9, 5, 3, rng);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  EXPECT_GT(psnr(a, b), 0.0);
  EXPECT_THROW((void)psnr(a, Image(9, 6, 3)), ShapeError);
  // Worst case for in-range images: every value off by 1 -> 0 dB.
  EXPECT_EQ(psnr(Image(2, 2, 3, 0.0), Image(2, 2, 3, 1.0)), 0.0);
}

TEST(Ssim, MatchesDirectSummationOracle) {
  RngStream rng(3);
  const Image a = random_image(16, 16, 3, rng);
  Image b = a;
  for (double& v : b.data()) v = std::clamp(v + 0.2 * (rng.uniform() - 0.5), 0.0, 1.0);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-10);
  const Image c = random_image(19, 23, 1, rng);
  const Image d = random_image(19, 23, 1, rng);
  EXPECT_NEAR(ssim(c, d), ssim_oracle(c, d), 1e-10);
}

TEST(Ssim, IdentityAndContinuity) {
  RngStream rng(4);
  const Image a = random_image(20, 20, 3, rng);
  EXPECT_EQ(ssim(a, a), 1.0);
  EXPECT_EQ(dssim(a, a), 0.0);

  const Image flat(16, 16, 3, 0.4);
  Image noisy = flat;
  for (double& v : noisy.data()) v += 1e-4 * (rng.uniform() - 0.5);
  EXPECT_GT(ssim(flat, noisy), 0.99);
  EXPECT_LT(dssim(flat, noisy), 0.005);
}

TEST(Ssim, SymmetryAndBounds) {
  RngStream rng(5);
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(12, 14, 3, rng);
    const Image b = random_image(12, 14, 3, rng);
    EXPECT_EQ(ssim(a, b), ssim(b, a));
    EXPECT_GE(ssim(a, b), -1.0);
    EXPECT_LE(ssim(a, b), 1.0);
    EXPECT_GE(dssim(a, b), 0.0);
    EXPECT_LE(dssim(a, b), 1.0);
  }
  // Anti-correlated structure drives SSIM negative, DSSIM above 1/2.
  Image a(12, 12, 1), b(12, 12, 1);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      a.at(0, y, x) = (x + y) % 2;
      b.at(0, y, x) = 1 - a.at(0, y, x);
    }
  EXPECT_LT(ssim(a, b), 0.0);
  EXPECT_GT(dssim(a, b), 0.5);
  EXPECT_LE(dssim(a, b), 1.0);
}

TEST(Ssim, RejectsSmallImages) {
  EXPECT_THROW((void)ssim(Image(10, 30, 3), Image(10, 30, 3)), ShapeError);
  EXPECT_THROW((void)ssim(Image(12, 12, 3), Image(12, 13, 3)), ShapeError);
  EXPECT_NO_THROW((void)ssim(Image(11, 11, 3), Image(11, 11, 3)));
}

TEST(Metrics, DegradationIsMonotone) {
  const double sigmas[] = {0.01, 0.03, 0.08, 0.2};
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng = RngStream(seed).derive("img");
    Image clean(32, 32, 3);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) clean.at(c, y, x) = 0.3 + 0.4 * (x + y) / 62.0;
    double prev_psnr = kPsnrIdentical, prev_dssim = 0.0;
    for (double s : sigmas) {
      RngStream noise = rng.derive(static_cast<std::uint64_t>(s * 1000));
      Image n = clean;
      for (double& v : n.data()) v = std::clamp(v + s * noise.normal(), 0.0, 1.0);
      const double p = psnr(n, clean), d = dssim(n, clean);
      violations += !(p < prev_psnr) + !(d > prev_dssim);
      prev_psnr = p;
      prev_dssim = d;
    }
  }
  EXPECT_EQ(violations, 0);
}

}  // namespace
}  // namespace wmr
