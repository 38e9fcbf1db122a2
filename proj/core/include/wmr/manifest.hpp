#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace wmr {

/// Where and how strongly one watermark instance is placed.
struct PlacementSpec {
  int top = 0;
  int left = 0;
  double scale = 1.0;
  double opacity = 1.0;

  friend bool operator==(const PlacementSpec&, const PlacementSpec&) = default;
};

enum class Split { train, test };

[[nodiscard]] std::string to_string(Split s);

struct ManifestRow {
  Split split = Split::train;
  /// Paths relative to the dataset root.
  std::string x_path;
  std::string y_path;
  std::string watermark_id;
  PlacementSpec placement;
  int footprint_height = 0;
  int footprint_width = 0;
  /// Index into the list of base images the dataset was built from.
  int base_index = 0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// Line-delimited JSON: a header object with format/version/seed/config,
/// then one object per sample.
struct DatasetManifest {
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ManifestRow> rows;
  /// Directory that relative paths resolve against (not serialized).
  std::filesystem::path root;

  [[nodiscard]] std::vector<ManifestRow> rows_in(Split s) const;
  [[nodiscard]] std::set<std::string> watermark_ids(Split s) const;
  [[nodiscard]] std::filesystem::path resolve(const std::string& relative) const {
    return root / relative;
  }
};

[[nodiscard]] std::string serialize_manifest(const DatasetManifest& m);
/// Throws DataError on malformed text or a watermark id present in both splits.
[[nodiscard]] DatasetManifest parse_manifest(const std::string& text,
                                             const std::filesystem::path& root);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
/// Root is taken to be the manifest's directory. Throws FileNotFoundError / DataError.
[[nodiscard]] DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace wmr
