#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wmr {

/// Counter-based random stream.
///
/// A stream is identified by a root seed plus a path of labels. Its key is a
/// hash of that path and draw k is mix(key, k), so a stream's output depends
/// only on where it sits in the derivation tree and never on the order in
/// which sibling streams were consumed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  [[nodiscard]] RngStream derive(std::string_view label) const;
  [[nodiscard]] RngStream derive(std::uint64_t index) const;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const std::vector<std::string>& path() const noexcept { return path_; }
  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }
  void set_counter(std::uint64_t counter) noexcept { counter_ = counter; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

  // UniformRandomBitGenerator, for interop with <random> / <algorithm>.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

 private:
  std::uint64_t seed_ = 0;
  std::vector<std::string> path_;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates permutation of 0..n-1.
[[nodiscard]] std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng);

}  // namespace wmr
