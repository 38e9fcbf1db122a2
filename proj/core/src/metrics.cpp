#include "wmr/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "wmr/errors.hpp"

namespace wmr {

namespace {

void require_same(const Image& a, const Image& b) {
  if (!a.same_shape(b) || a.empty()) {
    throw ShapeError("metric inputs differ in shape: " + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.channels()));
  }
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double centre = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    w[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering of one plane: output (h - k + 1) x (w - k + 1).
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& kernel) {
  const int k = static_cast<int>(kernel.size());
  const int ow = w - k + 1, oh = h - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) {
        s += kernel[static_cast<std::size_t>(i)] * src[static_cast<std::size_t>(y) * w + x + i];
      }
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) {
        s += kernel[static_cast<std::size_t>(i)] * rows[static_cast<std::size_t>(y + i) * ow + x];
      }
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same(a, b);
  const auto da = a.data();
  const auto db = b.data();
  double s = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) s += (da[i] - db[i]) * (da[i] - db[i]);
  return s / static_cast<double>(da.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / e);
}

double ssim(const Image& a, const Image& b, const SsimOptions& opts) {
  require_same(a, b);
  if (a.height() < opts.window || a.width() < opts.window) {
    throw ShapeError("image " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                     " is smaller than the SSIM window " + std::to_string(opts.window));
  }
  const double c1 = (opts.k1 * opts.peak) * (opts.k1 * opts.peak);
  const double c2 = (opts.k2 * opts.peak) * (opts.k2 * opts.peak);
  const auto kernel = gaussian_window(opts.window, opts.sigma);
  const int h = a.height(), w = a.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;

  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    std::vector<double> va(pa.begin(), pa.end()), vb(pb.begin(), pb.end());
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      aa[i] = va[i] * va[i];
      bb[i] = vb[i] * vb[i];
      ab[i] = va[i] * vb[i];
    }
    const auto mu_a = filter_valid(va, h, w, kernel);
    const auto mu_b = filter_valid(vb, h, w, kernel);
    const auto e_aa = filter_valid(aa, h, w, kernel);
    const auto e_bb = filter_valid(bb, h, w, kernel);
    const auto e_ab = filter_valid(ab, h, w, kernel);
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    count += mu_a.size();
  }
  return total / static_cast<double>(count);
}

double dssim(const Image& a, const Image& b, const SsimOptions& opts) {
  return (1.0 - ssim(a, b, opts)) / 2.0;
}

}  // namespace wmr
