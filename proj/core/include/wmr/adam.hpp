#pragma once

#include <cstdint>

#include "wmr/tensor.hpp"

namespace wmr {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
class Adam {
 public:
  Adam() = default;
  Adam(const AdamConfig& cfg, const nn::ParamSet& like);

  /// Throws ShapeError if the layouts disagree.
  void step(nn::ParamSet& params, const nn::ParamSet& grads);

  [[nodiscard]] const AdamConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::int64_t steps() const noexcept { return t_; }
  [[nodiscard]] const nn::ParamSet& first_moment() const noexcept { return m_; }
  [[nodiscard]] const nn::ParamSet& second_moment() const noexcept { return v_; }
  /// Restores saved state (checkpoint resume).
  void restore(nn::ParamSet m, nn::ParamSet v, std::int64_t t);

 private:
  AdamConfig cfg_;
  nn::ParamSet m_;
  nn::ParamSet v_;
  std::int64_t t_ = 0;
};

}  // namespace wmr
