#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "run_config.hpp"
#include "wmr/evaluate.hpp"
#include "wmr/manifest.hpp"
#include "wmr/trainer.hpp"

namespace wmr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// ConfigError -> 2, DataError (and subclasses) -> 3, NumericError -> 4, else 1.
[[nodiscard]] int exit_code_for(const std::exception& e) noexcept;

/// Writes bases, watermarks, pairs and manifest under cfg.dataset_dir.
DatasetManifest cmd_synthesize(const RunConfig& cfg, std::ostream& out);

struct TrainArgs {
  std::optional<std::filesystem::path> resume;
  std::int64_t max_steps = -1;
};

/// Validates the manifest, every training file, the extractor and the output
/// directory before the first step.
TrainResult cmd_train(const RunConfig& cfg, const TrainArgs& args, std::ostream& out);

struct RemoveSummary {
  std::vector<std::filesystem::path> written;
  std::vector<std::filesystem::path> skipped;
};

/// A file maps to one PNG (an existing directory as `output` receives
/// <stem>.png); a directory maps to <output>/<stem>.png per decodable input.
RemoveSummary cmd_remove(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                         const std::filesystem::path& output, std::ostream& out,
                         std::ostream& err);

struct EvaluateArgs {
  std::optional<std::filesystem::path> checkpoint;
  /// Also score the identity mapping (reproduces the input baseline).
  bool identity = false;
  Split split = Split::test;
  std::filesystem::path output_dir;
};

/// Writes evaluation.json and evaluation.txt into args.output_dir.
std::vector<EvalReport> cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args,
                                     std::ostream& out);

struct AblationVariant {
  std::string name;
  std::string label;
  LossConfig loss = LossConfig::cgan;
  DiscriminatorKind kind = DiscriminatorKind::patch;
};

/// Loss rows first, then discriminator rows; a patch-kind cGAN discriminator
/// row reuses the matching loss row instead of training twice.
[[nodiscard]] std::vector<AblationVariant> ablation_plan(const RunConfig& cfg);

struct AblationResult {
  nlohmann::json report;
  std::string table;
  bool audit_passed = false;
};

/// Trains and scores every variant on the same data, seed and order. After
/// each variant ablation.json is rewritten, so a failure leaves the finished
/// rows on disk before the error propagates.
AblationResult cmd_ablate(const RunConfig& cfg, const std::filesystem::path& output_dir,
                          std::ostream& out);

/// Parses argv and runs one subcommand; errors become exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wmr::cli
