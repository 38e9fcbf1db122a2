#pragma once

#include <vector>

#include "wmr/ops.hpp"
#include "wmr/rng.hpp"
#include "wmr/tensor.hpp"

namespace wmr {

/// U-Net generator shape. Down-block i produces min(base * 2^i, max_channels)
/// channels at side input_side / 2^(i+1); up-blocks mirror that chain.
struct GeneratorConfig {
  int depth = 6;
  int base_channels = 64;
  int input_side = 256;
  int in_channels = 3;
  int out_channels = 3;
  int max_channels = 512;

  /// Throws ConfigError.
  void validate() const;
  [[nodiscard]] int encoder_channels(int block) const;
  [[nodiscard]] int bottleneck_side() const { return input_side >> depth; }

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Static description of one block, used for shape audits and logging.
struct BlockLayout {
  int in_channels = 0;
  int out_channels = 0;
  int in_side = 0;
  int out_side = 0;
  bool normalized = false;
};

struct GeneratorLayout {
  std::vector<BlockLayout> down;
  std::vector<BlockLayout> up;
};

[[nodiscard]] GeneratorLayout generator_layout(const GeneratorConfig& cfg);

struct GeneratorParams {
  GeneratorConfig config;
  nn::ParamSet tensors;
};

/// Weights ~ N(0, 0.02), biases 0, normalization scale 1 and shift 0.
[[nodiscard]] GeneratorParams init_generator(const GeneratorConfig& cfg, RngStream rng);

/// Intermediate values kept by the forward pass for backpropagation.
struct GeneratorTape {
  struct Block {
    nn::Tensor input;
    nn::Tensor pre_activation;
    nn::NormCache norm;
  };
  std::vector<Block> down;
  std::vector<Block> up;
  nn::Tensor output;
  int zeroed_skip = -1;
};

struct GeneratorForwardOptions {
  /// Encoder block whose skip connection is replaced by zeros (-1: none).
  int zeroed_skip = -1;
};

/// x: N x in_channels x side x side in [-1, 1]. Output has the same shape
/// with out_channels, squashed to [-1, 1].
[[nodiscard]] nn::Tensor generator_forward(const GeneratorParams& params, const nn::Tensor& x,
                                           GeneratorTape* tape = nullptr,
                                           const GeneratorForwardOptions& options = {});

/// Accumulates parameter gradients into `grads` (same layout as
/// params.tensors) and returns the gradient with respect to the input.
nn::Tensor generator_backward(const GeneratorParams& params, const GeneratorTape& tape,
                              const nn::Tensor& dy, nn::ParamSet& grads);

}  // namespace wmr
