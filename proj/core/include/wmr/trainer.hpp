#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmr/adam.hpp"
#include "wmr/checkpoint.hpp"
#include "wmr/feature_extractor.hpp"
#include "wmr/manifest.hpp"
#include "wmr/train_config.hpp"
#include "wmr/watermark.hpp"

namespace wmr {

/// Loss components of one optimization step. Adversarial fields are empty
/// for non-adversarial loss configurations.
struct StepMetrics {
  std::int64_t step = 0;
  int epoch = 0;
  std::optional<double> d_loss;
  std::optional<double> d_real;  // mean D(x, y)
  std::optional<double> d_fake;  // mean D(x, G(x)) before the D update
  std::optional<double> adv_g;
  double l1 = 0.0;
  double perceptual = 0.0;
  double total_g = 0.0;

  friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

struct EpochMetrics {
  int epoch = 0;
  std::int64_t steps = 0;
  double mean_l1 = 0.0;
  double mean_perceptual = 0.0;
  double mean_total_g = 0.0;
  std::optional<double> mean_d_loss;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

[[nodiscard]] nlohmann::json to_json(const StepMetrics& m);
[[nodiscard]] nlohmann::json to_json(const EpochMetrics& m);

/// Owns G, D, their optimizers and the frozen extractor for one run.
///
/// Each step first updates D on the adversarial loss with G's output held
/// fixed, then updates G on the weighted objective. Gradients reaching D
/// during the G step are discarded.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);
  explicit Trainer(const Checkpoint& ckpt);

  /// x, y: N x 3 x side x side in [-1, 1]. Throws NumericError on a
  /// non-finite loss, ShapeError on bad dims.
  StepMetrics train_step(const nn::Tensor& x, const nn::Tensor& y);
  StepMetrics train_step(const PairedSample& sample);

  [[nodiscard]] Checkpoint checkpoint() const;
  [[nodiscard]] const TrainConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const GeneratorParams& generator() const noexcept { return g_; }
  [[nodiscard]] const DiscriminatorParams& discriminator() const noexcept { return d_; }
  [[nodiscard]] const FeatureExtractor& extractor() const noexcept { return extractor_; }
  [[nodiscard]] std::int64_t step() const noexcept { return step_; }
  void set_epoch(int epoch) noexcept { epoch_ = epoch; }

 private:
  TrainConfig cfg_;
  GeneratorParams g_;
  DiscriminatorParams d_;
  Adam g_opt_;
  Adam d_opt_;
  FeatureExtractor extractor_;
  RngStream rng_;
  std::int64_t step_ = 0;
  int epoch_ = 0;
};

struct TrainOptions {
  /// Checkpoints and metrics.jsonl go here; empty disables all file output.
  std::filesystem::path output_dir;
  /// Continue from this state instead of a fresh initialization.
  std::optional<Checkpoint> resume;
  /// Stop once this many total steps have run (-1: run every epoch).
  std::int64_t max_steps = -1;
  std::function<void(const StepMetrics&)> on_step;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  Checkpoint final_checkpoint;
  std::vector<StepMetrics> steps;
  std::vector<EpochMetrics> epochs;
  /// Hash of the full planned visiting order (all epochs) of training samples.
  std::uint64_t data_order_hash = 0;
  bool completed = false;
};

/// Training-sample visiting order for one epoch; depends only on seed,
/// epoch and sample count.
[[nodiscard]] std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n);
[[nodiscard]] std::uint64_t data_order_hash(std::uint64_t seed, int epochs, std::size_t n);

/// Runs epochs x train split in seeded shuffled order, batching consecutive
/// samples. Throws DataError on an empty train split; NumericError (after
/// writing a diagnostic dump when output_dir is set) on a non-finite loss.
TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const TrainOptions& options = {});

/// Generator in evaluation mode; output mapped back to [0, 1].
/// Throws ShapeError unless x is RGB at the configured side.
[[nodiscard]] Image remove_watermark(const GeneratorParams& generator, const Image& x);
[[nodiscard]] Image remove_watermark(const Checkpoint& ckpt, const Image& x);
/// As above, but resizes to the network side and back when dims differ.
[[nodiscard]] Image remove_watermark_resized(const GeneratorParams& generator, const Image& x);

}  // namespace wmr
