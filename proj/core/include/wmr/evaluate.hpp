#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmr/checkpoint.hpp"
#include "wmr/image.hpp"
#include "wmr/manifest.hpp"
#include "wmr/metrics.hpp"

namespace wmr {

/// Maps a watermarked image in [0, 1] to a restored one of the same shape.
using Remover = std::function<Image(const Image&)>;

struct SampleScore {
  std::string x_path;
  std::string watermark_id;
  double output_psnr = 0.0;
  double output_dssim = 0.0;
  double input_psnr = 0.0;   // x vs y
  double input_dssim = 0.0;
  // Output quantized to 8 bits, as it would be after writing a PNG.
  double quantized_psnr = 0.0;
  double quantized_dssim = 0.0;
};

struct Aggregate {
  std::size_t count = 0;
  double output_psnr = 0.0;
  double output_dssim = 0.0;
  double input_psnr = 0.0;
  double input_dssim = 0.0;
  double quantized_psnr = 0.0;
  double quantized_dssim = 0.0;
};

struct EvalReport {
  std::string label;
  std::vector<SampleScore> samples;
  Aggregate overall;
  std::map<std::string, Aggregate> per_watermark;
  SsimOptions ssim_options;
};

/// Arithmetic means of the given scores.
[[nodiscard]] Aggregate aggregate(const std::vector<SampleScore>& scores);

struct EvalOptions {
  Split split = Split::test;
  /// Samples are scored concurrently; the report does not depend on this.
  int workers = 1;
  std::string label = "model";
};

/// Scores every row of the split. Throws DataError on an empty split and
/// FileNotFoundError / DecodeError on unreadable samples.
[[nodiscard]] EvalReport evaluate(const Remover& remover, const DatasetManifest& manifest,
                                  const EvalOptions& options = {});
[[nodiscard]] EvalReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest,
                                  const EvalOptions& options = {});
/// Output = input; reproduces the input baseline.
[[nodiscard]] EvalReport evaluate_identity(const DatasetManifest& manifest,
                                           const EvalOptions& options = {});

/// Metric conventions recorded in every serialized report.
[[nodiscard]] nlohmann::json metric_conventions(const SsimOptions& opts = {});
[[nodiscard]] nlohmann::json to_json(const Aggregate& a);
[[nodiscard]] nlohmann::json to_json(const EvalReport& r);

/// Plain-text table: an "Input" row followed by one row per report, with
/// PSNR and DSSIM columns. Infinite PSNR prints as "inf".
[[nodiscard]] std::string format_table(const std::vector<EvalReport>& reports,
                                       const std::string& title);

}  // namespace wmr
