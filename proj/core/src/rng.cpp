#include "wmr/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace wmr {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix(std::uint64_t z) noexcept {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_label(std::uint64_t parent, std::string_view label) noexcept {
  // FNV-1a over the label, then folded with the parent key.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return splitmix(parent ^ splitmix(h));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), key_(splitmix(seed)) {}

RngStream RngStream::derive(std::string_view label) const {
  RngStream child = *this;
  child.path_.emplace_back(label);
  child.key_ = hash_label(key_, label);
  child.counter_ = 0;
  return child;
}

RngStream RngStream::derive(std::uint64_t index) const {
  RngStream child = *this;
  child.path_.push_back("#" + std::to_string(index));
  child.key_ = splitmix(key_ ^ splitmix(index + kGolden));
  child.counter_ = 0;
  return child;
}

std::uint64_t RngStream::next_u64() noexcept {
  return splitmix(key_ ^ splitmix(counter_++));
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform();
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  if (hi <= lo) return lo;
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());
  const std::uint64_t limit = max() - max() % span;
  std::uint64_t r = next_u64();
  while (r >= limit) r = next_u64();
  return lo + static_cast<std::int64_t>(r % span);
}

double RngStream::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace wmr
