#pragma once

#include "wmr/feature_extractor.hpp"
#include "wmr/tensor.hpp"

namespace wmr {

/// Weights of the content terms relative to the adversarial term.
struct LossWeights {
  double alpha = 10.0;   // L1
  double beta = 1e-4;    // perceptual

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-7;

/// Mean absolute difference over every element. Throws ShapeError.
[[nodiscard]] double l1_loss(const nn::Tensor& output, const nn::Tensor& target);
/// d l1_loss / d output; sign(output - target) / numel, with sign(0) = 0.
[[nodiscard]] nn::Tensor l1_loss_grad(const nn::Tensor& output, const nn::Tensor& target);

/// ||phi(output) - phi(target)||^2 / (C_j H_j W_j), averaged over the batch.
[[nodiscard]] double perceptual_loss(const FeatureExtractor& extractor, const nn::Tensor& output,
                                     const nn::Tensor& target);

struct LossAndGrad {
  double value = 0.0;
  nn::Tensor grad;
};
/// Perceptual loss and its gradient with respect to `output`.
[[nodiscard]] LossAndGrad perceptual_loss_with_grad(const FeatureExtractor& extractor,
                                                    const nn::Tensor& output,
                                                    const nn::Tensor& target);

/// -(mean log d_real + mean log(1 - d_fake)), means over every map entry.
[[nodiscard]] double adversarial_d_loss(const nn::Tensor& d_real, const nn::Tensor& d_fake);
/// Non-saturating generator loss: -mean log d_fake.
[[nodiscard]] double adversarial_g_loss(const nn::Tensor& d_fake);

// Gradients of the adversarial losses with respect to the discriminator
// logits z (d = sigmoid(z)). They are the exact derivatives of the unclamped
// losses: d/dz -log(sigmoid z) = sigmoid(z) - 1 and
// d/dz -log(1 - sigmoid z) = sigmoid(z).
[[nodiscard]] nn::Tensor adversarial_real_logit_grad(const nn::Tensor& d_real);
[[nodiscard]] nn::Tensor adversarial_fake_logit_grad(const nn::Tensor& d_fake);
[[nodiscard]] nn::Tensor adversarial_g_logit_grad(const nn::Tensor& d_fake);

/// adv + alpha * l1 + beta * per. Throws NumericError on non-finite inputs.
[[nodiscard]] double total_generator_loss(double adv, double l1, double per, const LossWeights& w);

}  // namespace wmr
