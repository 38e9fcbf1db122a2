#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wmr/tensor.hpp"

namespace wmr {

enum class ExtractorProvenance { pretrained_asset, fixed_random, identity };

[[nodiscard]] std::string to_string(ExtractorProvenance p);

/// How to obtain the frozen perceptual network.
struct ExtractorConfig {
  ExtractorProvenance provenance = ExtractorProvenance::fixed_random;
  /// pretrained_asset: weight file and its expected SHA-256 (hex).
  std::filesystem::path asset_path;
  std::string sha256;
  /// fixed_random: widths of the two convolution stages and the weight seed.
  int width1 = 8;
  int width2 = 16;
  std::uint64_t seed = 0x5eed;

  friend bool operator==(const ExtractorConfig&, const ExtractorConfig&) = default;
};

struct ExtractorTape {
  std::vector<nn::Tensor> conv_inputs;
  std::vector<nn::Tensor> pre_activations;
  nn::Shape pool_input;
  std::vector<std::size_t> pool_argmax;
};

/// Frozen feature network truncated after the second rectified convolution
/// of its second stage:
///   conv3x3 -> relu -> conv3x3 -> relu -> maxpool2 -> conv3x3 -> relu -> conv3x3 -> relu
/// which is the relu2_2 cut of the 16-layer VGG network. Inputs arrive in the
/// network range [-1, 1] and are mapped to [0, 1] and then standardized with
/// the per-channel statistics the weights expect.
///
/// The identity variant returns its input unchanged, which makes the
/// perceptual loss a plain normalized squared distance (used by tests).
class FeatureExtractor {
 public:
  [[nodiscard]] static FeatureExtractor identity();
  [[nodiscard]] static FeatureExtractor fixed_random(int width1, int width2, std::uint64_t seed);
  /// Throws FileNotFoundError, DataError on a checksum mismatch or malformed file.
  [[nodiscard]] static FeatureExtractor from_file(const std::filesystem::path& path,
                                                  const std::string& expected_sha256);
  [[nodiscard]] static FeatureExtractor from_config(const ExtractorConfig& cfg);

  [[nodiscard]] nn::Tensor features(const nn::Tensor& x, ExtractorTape* tape = nullptr) const;
  /// Gradient with respect to the input. Weights never receive gradients.
  [[nodiscard]] nn::Tensor backward(const ExtractorTape& tape, const nn::Tensor& dfeatures) const;

  [[nodiscard]] ExtractorProvenance provenance() const noexcept { return provenance_; }
  [[nodiscard]] const nn::ParamSet& weights() const noexcept { return weights_; }
  [[nodiscard]] const std::string& checksum() const noexcept { return checksum_; }

 private:
  FeatureExtractor() = default;

  ExtractorProvenance provenance_ = ExtractorProvenance::identity;
  nn::ParamSet weights_;
  std::array<double, 3> mean_{0.5, 0.5, 0.5};
  std::array<double, 3> std_{0.5, 0.5, 0.5};
  std::string checksum_;
};

/// Lower-case hex SHA-256 of a file's bytes. Throws FileNotFoundError.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

/// Writes weights in the extractor file format (float32, little endian):
///   "WMRFX001" | u32 layer count | per layer: u32 cout, cin, kh, kw,
///   f32 weight[cout*cin*kh*kw], f32 bias[cout]
void write_extractor_file(const std::filesystem::path& path, const nn::ParamSet& weights);

}  // namespace wmr
