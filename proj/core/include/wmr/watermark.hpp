#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wmr/image.hpp"
#include "wmr/manifest.hpp"
#include "wmr/rng.hpp"

namespace wmr {

/// RGBA watermark; channel 3 is the per-pixel coverage a in [0, 1].
struct WatermarkAsset {
  std::string id;
  Image image;

  /// Throws ConfigError unless the image is valid RGBA with some a > 0.
  void validate() const;
};

/// Loads an RGBA (or RGB, treated as fully opaque) PNG; id = file stem.
[[nodiscard]] WatermarkAsset load_watermark(const std::filesystem::path& path);
/// Every decodable image in `dir`, sorted by file name.
[[nodiscard]] std::vector<WatermarkAsset> load_watermarks(const std::filesystem::path& dir);

struct Footprint {
  int height = 0;
  int width = 0;
};

/// Footprint of a watermark scaled so its width is round(scale * base_width),
/// aspect ratio preserved (each side at least one pixel).
[[nodiscard]] Footprint footprint_for(int base_width, int wm_height, int wm_width, double scale);

[[nodiscard]] bool placement_fits(const PlacementSpec& spec, const Footprint& fp, int base_height,
                                  int base_width);

/// Per pixel inside the footprint:
///   out = (1 - opacity * a) * base + opacity * a * wm_rgb
/// with the asset resampled bilinearly to the footprint. Pixels outside the
/// footprint are copied unchanged. Throws PlacementError if the footprint
/// leaves the image, ConfigError on an opacity outside [0, 1].
[[nodiscard]] Image composite(const Image& base, const WatermarkAsset& wm, const PlacementSpec& spec);

/// Analytic inverse of composite: base = (out - k * wm_rgb) / (1 - k), k = opacity * a.
/// Throws PlacementError where k == 1 (an opaque pixel carries no base information).
[[nodiscard]] Image invert_composite(const Image& out, const WatermarkAsset& wm,
                                     const PlacementSpec& spec);

/// Uniform sampling ranges for placements. Scale is footprint width over base width.
struct PlacementRanges {
  double scale_min = 0.3;
  double scale_max = 1.0;
  double opacity_min = 0.3;
  double opacity_max = 1.0;

  void validate() const;
};

/// Scale uniform over the admissible part of [scale_min, scale_max], opacity
/// uniform over [opacity_min, opacity_max], position uniform over all in-bounds
/// offsets. Throws PlacementError when even scale_min does not fit.
[[nodiscard]] PlacementSpec sample_placement(RngStream& rng, int base_height, int base_width,
                                             int wm_height, int wm_width,
                                             const PlacementRanges& ranges);

struct PairedSample {
  Image x;  // watermarked
  Image y;  // clean
  std::string watermark_id;
  PlacementSpec placement;
};

struct BuildOptions {
  std::filesystem::path output_root;
  int per_watermark = 750;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  PlacementRanges ranges;
  /// Worker threads; output is identical for any count.
  int workers = 1;
  /// Alternative bases tried before a sample is skipped.
  int max_retries = 8;
};

/// Watermark ids assigned to the training split: round(ratio * n), kept in
/// [1, n - 1] when n >= 2, chosen by a seeded shuffle.
[[nodiscard]] std::vector<std::string> choose_train_ids(const std::vector<std::string>& ids,
                                                        double split_ratio, std::uint64_t seed);

/// Composites per_watermark samples for every asset onto randomly chosen
/// bases, writes <root>/{train,test}/{x,y}/*.png and <root>/manifest.txt.
/// Samples whose placement is impossible after max_retries are skipped and
/// logged. Throws ConfigError / DataError / IoError.
DatasetManifest build_dataset(const std::vector<std::filesystem::path>& bases,
                              const std::vector<WatermarkAsset>& watermarks,
                              const BuildOptions& options);

}  // namespace wmr
