#include "wmr/tensor.hpp"

#include <algorithm>
#include <cstring>

#include "wmr/errors.hpp"

namespace wmr::nn {

std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor extent " + to_string(shape));
  }
  data_.assign(shape.numel(), fill);
}

void Tensor::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!(shape_ == other.shape_)) {
    throw ShapeError("tensor add: " + to_string(shape_) + " vs " + to_string(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

std::size_t ParamSet::add(std::string name, Tensor value) {
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return tensors_.size() - 1;
}

std::size_t ParamSet::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ConfigError("no parameter named " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (std::size_t i = 0; i < tensors_.size(); ++i) out.add(names_[i], Tensor(tensors_[i].shape()));
  return out;
}

void ParamSet::zero() noexcept {
  for (auto& t : tensors_) t.fill(0.0);
}

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

bool ParamSet::same_layout(const ParamSet& other) const noexcept {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (!(tensors_[i].shape() == other.tensors_[i].shape())) return false;
  }
  return true;
}

std::uint64_t ParamSet::hash() const noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001B3ULL;
    }
  };
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    mix(names_[i].data(), names_[i].size());
    const Shape s = tensors_[i].shape();
    mix(&s, sizeof(s));
    const auto d = tensors_[i].data();
    mix(d.data(), d.size_bytes());
  }
  return h;
}

Tensor to_network(const Image& img) {
  Tensor t(Shape{1, img.channels(), img.height(), img.width()});
  const auto src = img.data();
  auto dst = t.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * 2.0 - 1.0;
  return t;
}

Image from_network(const Tensor& t, int n) {
  const Shape s = t.shape();
  Image img(s.h, s.w, s.c);
  auto dst = img.data();
  const double* src = t.plane(n, 0);
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::clamp((src[i] + 1.0) * 0.5, 0.0, 1.0);
  return img;
}

}  // namespace wmr::nn
