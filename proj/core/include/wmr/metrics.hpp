#pragma once

#include <limits>

#include "wmr/image.hpp"

namespace wmr {

/// PSNR reported for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Mean squared error over every channel. Throws ShapeError.
[[nodiscard]] double mse(const Image& a, const Image& b);

/// 10 log10(peak^2 / MSE) with peak 1.0; kPsnrIdentical when MSE is zero.
[[nodiscard]] double psnr(const Image& a, const Image& b);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Gaussian-windowed SSIM over every fully contained window, averaged over
/// windows and channels. Throws ShapeError when a side is smaller than the
/// window or the shapes differ.
[[nodiscard]] double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

/// (1 - SSIM) / 2.
[[nodiscard]] double dssim(const Image& a, const Image& b, const SsimOptions& opts = {});

}  // namespace wmr
