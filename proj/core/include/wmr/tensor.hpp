#pragma once

#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "wmr/image.hpp"

namespace wmr::nn {

/// NCHW extents. Every tensor in the network code is four dimensional; vectors
/// and scalars are expressed as 1x1 spatial maps.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::size_t numel() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  [[nodiscard]] std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

[[nodiscard]] std::string to_string(const Shape& s);

/// 64-byte aligned storage. Vectorized kernels peel loops by alignment, so
/// buffers with varying heap alignment would sum in varying order.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t numel() const noexcept { return data_.size(); }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] double* plane(int n, int c) noexcept {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }
  [[nodiscard]] const double* plane(int n, int c) const noexcept {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }
  [[nodiscard]] double& operator()(int n, int c, int y, int x) noexcept {
    return plane(n, c)[static_cast<std::size_t>(y) * shape_.w + x];
  }
  [[nodiscard]] double operator()(int n, int c, int y, int x) const noexcept {
    return plane(n, c)[static_cast<std::size_t>(y) * shape_.w + x];
  }

  void fill(double v) noexcept;
  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  Buffer data_;
};

/// Named, ordered parameter tensors. Gradients and optimizer moments are
/// stored in ParamSets with the same layout as the parameters they track.
class ParamSet {
 public:
  std::size_t add(std::string name, Tensor value);

  [[nodiscard]] std::size_t size() const noexcept { return tensors_.size(); }
  [[nodiscard]] Tensor& operator[](std::size_t i) noexcept { return tensors_[i]; }
  [[nodiscard]] const Tensor& operator[](std::size_t i) const noexcept { return tensors_[i]; }
  [[nodiscard]] const std::string& name(std::size_t i) const noexcept { return names_[i]; }
  [[nodiscard]] std::size_t index_of(const std::string& name) const;

  [[nodiscard]] ParamSet zeros_like() const;
  void zero() noexcept;
  [[nodiscard]] std::size_t scalar_count() const noexcept;
  [[nodiscard]] bool same_layout(const ParamSet& other) const noexcept;
  /// FNV-1a over names, shapes and raw value bytes.
  [[nodiscard]] std::uint64_t hash() const noexcept;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

/// Image in [0, 1] -> 1xCxHxW tensor in the network range [-1, 1].
[[nodiscard]] Tensor to_network(const Image& img);
/// Batch element `n` of a network-range tensor -> Image in [0, 1] (clamped).
[[nodiscard]] Image from_network(const Tensor& t, int n = 0);

}  // namespace wmr::nn
