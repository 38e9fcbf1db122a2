#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

#include "wmr/image.hpp"
#include "wmr/rng.hpp"
#include "wmr/tensor.hpp"

namespace wmr::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "wmr") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline nn::Tensor random_tensor(nn::Shape s, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline Image random_image(int h, int w, int c, RngStream& rng) {
  Image img(h, w, c);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

/// Central difference of f with respect to *value.
inline double central_difference(const std::function<double()>& f, double* value,
                                 double h = 1e-5) {
  const double saved = *value;
  *value = saved + h;
  const double plus = f();
  *value = saved - h;
  const double minus = f();
  *value = saved;
  return (plus - minus) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor): the floor keeps near-zero gradients from
/// dominating the ratio with rounding noise.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace wmr::testing
