#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "wmr/adam.hpp"
#include "wmr/discriminator.hpp"
#include "wmr/feature_extractor.hpp"
#include "wmr/generator.hpp"
#include "wmr/losses.hpp"

namespace wmr {

/// Which terms of the objective are active (the five loss ablation rows).
enum class LossConfig { l1, perceptual, l1_perceptual, gan, cgan };

[[nodiscard]] std::string to_string(LossConfig c);
/// Accepts "l1", "perceptual", "l1+perceptual", "+gan" / "l1+perceptual+gan",
/// "+cgan" / "l1+perceptual+cgan". Throws ConfigError.
[[nodiscard]] LossConfig parse_loss_config(const std::string& text);
/// Row label used in comparison tables, e.g. "L1 + Perceptual + cGAN".
[[nodiscard]] std::string table_label(LossConfig c);

[[nodiscard]] constexpr bool uses_l1(LossConfig c) { return c != LossConfig::perceptual; }
[[nodiscard]] constexpr bool uses_perceptual(LossConfig c) { return c != LossConfig::l1; }
[[nodiscard]] constexpr bool is_adversarial(LossConfig c) {
  return c == LossConfig::gan || c == LossConfig::cgan;
}

struct TrainConfig {
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  int batch_size = 1;
  int epochs = 20;
  LossConfig loss = LossConfig::cgan;
  DiscriminatorKind discriminator_kind = DiscriminatorKind::patch;
  LossWeights weights;
  std::uint64_t seed = 0;
  /// Write an intermediate checkpoint every this many steps (0: final only).
  std::int64_t checkpoint_interval = 0;

  GeneratorConfig generator;
  /// Width and depth of D; kind and conditioning follow `loss` and
  /// `discriminator_kind` (see effective_discriminator).
  DiscriminatorConfig discriminator;
  ExtractorConfig extractor;

  /// Throws ConfigError.
  void validate() const;
  [[nodiscard]] DiscriminatorConfig effective_discriminator() const;
  [[nodiscard]] AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, 1e-8}; }
};

[[nodiscard]] nlohmann::json to_json(const GeneratorConfig& c);
[[nodiscard]] nlohmann::json to_json(const DiscriminatorConfig& c);
[[nodiscard]] nlohmann::json to_json(const ExtractorConfig& c);
[[nodiscard]] nlohmann::json to_json(const TrainConfig& c);

/// Reads the keys present in `j` on top of `base`; unknown keys are a
/// ConfigError so typos do not silently fall back to defaults.
[[nodiscard]] GeneratorConfig generator_config_from_json(const nlohmann::json& j,
                                                         GeneratorConfig base = {});
[[nodiscard]] DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j,
                                                                 DiscriminatorConfig base = {});
[[nodiscard]] ExtractorConfig extractor_config_from_json(const nlohmann::json& j,
                                                         ExtractorConfig base = {});
[[nodiscard]] TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace wmr
