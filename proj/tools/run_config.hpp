#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmr/train_config.hpp"
#include "wmr/watermark.hpp"

namespace wmr::cli {

/// Where synthesis takes its inputs. Empty directories mean procedural
/// stand-ins of the given counts and sizes.
struct SynthesisConfig {
  std::filesystem::path bases_dir;
  int procedural_bases = 40;
  /// Side bases are cropped or generated at; 0 follows the generator side.
  int base_side = 0;
  std::filesystem::path watermarks_dir;
  int procedural_watermarks = 5;
  int watermark_height = 24;
  int watermark_width = 32;
  int per_watermark = 40;
  double split_ratio = 0.8;
  PlacementRanges ranges;
  int workers = 1;
  int max_retries = 8;
};

/// One declarative document for every command. Relative paths resolve
/// against the directory of the file they were read from.
struct RunConfig {
  std::uint64_t seed = 0;
  TrainConfig train;
  SynthesisConfig synthesis;
  /// Synthesis output root; its manifest.txt is the default manifest.
  std::filesystem::path dataset_dir = "data";
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "runs";
  int eval_workers = 1;
  std::vector<LossConfig> ablation_losses{LossConfig::l1, LossConfig::perceptual,
                                          LossConfig::l1_perceptual, LossConfig::gan,
                                          LossConfig::cgan};
  std::vector<DiscriminatorKind> ablation_discriminators{DiscriminatorKind::image,
                                                         DiscriminatorKind::patch};

  [[nodiscard]] std::filesystem::path manifest_path() const {
    return manifest.empty() ? dataset_dir / "manifest.txt" : manifest;
  }
  /// Copies the top-level seed into the training config. Throws ConfigError.
  void finalize();
};

/// Unknown keys are a ConfigError. A "seed" inside "train" is rejected so
/// the top-level seed stays the single source.
[[nodiscard]] RunConfig run_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir = {});
[[nodiscard]] nlohmann::json to_json(const RunConfig& c);
/// Throws FileNotFoundError, ConfigError on malformed JSON.
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// Name of the variable that overrides train.extractor.asset_path.
inline constexpr const char* kExtractorPathEnv = "WMR_EXTRACTOR_PATH";
/// Applies the environment override, if set.
void apply_environment(RunConfig& c);

}  // namespace wmr::cli
