#pragma once

#include <string>
#include <vector>

#include "wmr/ops.hpp"
#include "wmr/rng.hpp"
#include "wmr/tensor.hpp"

namespace wmr {

enum class DiscriminatorKind { patch, image };

[[nodiscard]] std::string to_string(DiscriminatorKind kind);
/// Accepts "patch"/"patch-based" and "image"/"image-based". Throws ConfigError.
[[nodiscard]] DiscriminatorKind parse_discriminator_kind(const std::string& text);

/// Patch discriminator: n_layers stride-2 4x4 convolutions (channels
/// base, 2*base, ... capped at 8*base), one stride-1 4x4 convolution, then a
/// stride-1 4x4 convolution to a single logit channel. The image variant
/// keeps the same trunk but replaces the logit convolution with global
/// average pooling and one affine layer.
struct DiscriminatorConfig {
  DiscriminatorKind kind = DiscriminatorKind::patch;
  int base_channels = 64;
  int n_layers = 3;
  /// Conditional discriminators see condition and candidate concatenated.
  bool conditional = true;
  int image_channels = 3;

  void validate() const;
  [[nodiscard]] int in_channels() const { return conditional ? 2 * image_channels : image_channels; }
  /// Output channels of trunk layer i (0 .. n_layers).
  [[nodiscard]] int layer_channels(int i) const;

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

/// Side of the patch score map for a square input of the given side.
[[nodiscard]] int score_map_side(const DiscriminatorConfig& cfg, int input_side);
/// Receptive field (pixels) of one score-map entry, by the recurrence
/// r += (k - 1) * jump; jump *= stride over all convolutions.
[[nodiscard]] int patch_receptive_field(const DiscriminatorConfig& cfg);

struct DiscriminatorParams {
  DiscriminatorConfig config;
  nn::ParamSet tensors;
};

[[nodiscard]] DiscriminatorParams init_discriminator(const DiscriminatorConfig& cfg, RngStream rng);

/// Per-entry real probabilities: N x 1 x H x W for the patch kind, N x 1 x 1 x 1
/// for the image kind.
struct PatchScoreMap {
  nn::Tensor probabilities;
  /// Pixels seen by one entry; for the image kind this is the whole input side.
  int receptive_field = 0;
};

struct DiscriminatorTape {
  struct Layer {
    nn::Tensor input;
    nn::Tensor pre_activation;
    nn::NormCache norm;
  };
  std::vector<Layer> layers;
  nn::Tensor head_input;
  nn::Tensor pooled;
  nn::Tensor logits;
};

/// Raw logits from an already-assembled input (condition ⊕ candidate for
/// conditional configs, candidate alone otherwise).
[[nodiscard]] nn::Tensor discriminator_logits(const DiscriminatorParams& params,
                                              const nn::Tensor& input,
                                              DiscriminatorTape* tape = nullptr);

/// Accumulates parameter gradients and returns the gradient with respect to
/// the assembled input.
nn::Tensor discriminator_backward(const DiscriminatorParams& params, const DiscriminatorTape& tape,
                                  const nn::Tensor& dlogits, nn::ParamSet& grads);

/// Conditional scoring of `candidate` given the watermarked `condition`.
/// Throws ShapeError on mismatched shapes, ConfigError on an unconditional config.
[[nodiscard]] PatchScoreMap discriminator_forward(const DiscriminatorParams& params,
                                                  const nn::Tensor& condition,
                                                  const nn::Tensor& candidate);

/// Scoring of `candidate` alone. Throws ConfigError on a conditional config.
[[nodiscard]] PatchScoreMap unconditional_forward(const DiscriminatorParams& params,
                                                  const nn::Tensor& candidate);

/// Assembles the discriminator input for either flavour.
[[nodiscard]] nn::Tensor discriminator_input(const DiscriminatorConfig& cfg,
                                             const nn::Tensor& condition,
                                             const nn::Tensor& candidate);

/// Mean of all entries: the probability that the whole input is real.
/// Throws ShapeError on an empty map.
[[nodiscard]] double aggregate_real_probability(const PatchScoreMap& map);

}  // namespace wmr
