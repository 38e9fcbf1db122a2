#include "wmr/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

#include "wmr/errors.hpp"

namespace wmr {

namespace fs = std::filesystem;

void WatermarkAsset::validate() const {
  if (image.channels() != 4) throw ConfigError("watermark '" + id + "' must be RGBA");
  if (!image.valid()) throw ConfigError("watermark '" + id + "' has values outside [0, 1]");
  const auto alpha = image.plane(3);
  if (std::none_of(alpha.begin(), alpha.end(), [](double a) { return a > 0.0; })) {
    throw ConfigError("watermark '" + id + "' is fully transparent");
  }
}

WatermarkAsset load_watermark(const fs::path& path) {
  Image img = load_image(path);
  if (img.channels() == 3) {
    Image rgba(img.height(), img.width(), 4, 1.0);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) rgba.at(c, y, x) = img.at(c, y, x);
    img = std::move(rgba);
  }
  WatermarkAsset wm{path.stem().string(), std::move(img)};
  wm.validate();
  return wm;
}

std::vector<WatermarkAsset> load_watermarks(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FileNotFoundError("watermark directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<WatermarkAsset> out;
  for (const auto& f : files) {
    try {
      out.push_back(load_watermark(f));
    } catch (const DecodeError& e) {
      std::clog << "skipping " << f.string() << ": " << e.what() << '\n';
    }
  }
  return out;
}

Footprint footprint_for(int base_width, int wm_height, int wm_width, double scale) {
  Footprint fp;
  fp.width = std::max(1, static_cast<int>(std::lround(scale * base_width)));
  fp.height = std::max(1, static_cast<int>(std::lround(static_cast<double>(wm_height) * fp.width /
                                                       wm_width)));
  return fp;
}

bool placement_fits(const PlacementSpec& spec, const Footprint& fp, int base_height,
                    int base_width) {
  return spec.top >= 0 && spec.left >= 0 && spec.top + fp.height <= base_height &&
         spec.left + fp.width <= base_width;
}

namespace {

struct Prepared {
  Footprint fp;
  Image scaled;  // RGBA at footprint size
};

Prepared prepare(const Image& base, const WatermarkAsset& wm, const PlacementSpec& spec) {
  if (base.channels() != 3) throw ShapeError("composite base must be RGB");
  if (wm.image.channels() != 4) throw ShapeError("watermark must be RGBA");
  if (!(spec.opacity >= 0.0 && spec.opacity <= 1.0)) {
    throw ConfigError("opacity must lie in [0, 1]");
  }
  if (!(spec.scale > 0.0)) throw ConfigError("scale must be positive");
  Prepared p;
  p.fp = footprint_for(base.width(), wm.image.height(), wm.image.width(), spec.scale);
  if (!placement_fits(spec, p.fp, base.height(), base.width())) {
    throw PlacementError("watermark footprint " + std::to_string(p.fp.height) + "x" +
                         std::to_string(p.fp.width) + " at (" + std::to_string(spec.top) + ", " +
                         std::to_string(spec.left) + ") leaves the " +
                         std::to_string(base.height()) + "x" + std::to_string(base.width()) +
                         " image");
  }
  p.scaled = resize(wm.image, p.fp.height, p.fp.width);
  return p;
}

}  // namespace

Image composite(const Image& base, const WatermarkAsset& wm, const PlacementSpec& spec) {
  const Prepared p = prepare(base, wm, spec);
  Image out = base;
  for (int y = 0; y < p.fp.height; ++y) {
    for (int x = 0; x < p.fp.width; ++x) {
      const double k = spec.opacity * p.scaled.at(3, y, x);
      for (int c = 0; c < 3; ++c) {
        double& px = out.at(c, spec.top + y, spec.left + x);
        px = std::clamp((1.0 - k) * px + k * p.scaled.at(c, y, x), 0.0, 1.0);
      }
    }
  }
  return out;
}

Image invert_composite(const Image& out, const WatermarkAsset& wm, const PlacementSpec& spec) {
  const Prepared p = prepare(out, wm, spec);
  Image base = out;
  for (int y = 0; y < p.fp.height; ++y) {
    for (int x = 0; x < p.fp.width; ++x) {
      const double k = spec.opacity * p.scaled.at(3, y, x);
      if (k >= 1.0) {
        throw PlacementError("opaque watermark pixel at (" + std::to_string(spec.top + y) + ", " +
                             std::to_string(spec.left + x) + ") cannot be inverted");
      }
      for (int c = 0; c < 3; ++c) {
        double& px = base.at(c, spec.top + y, spec.left + x);
        px = (px - k * p.scaled.at(c, y, x)) / (1.0 - k);
      }
    }
  }
  return base;
}

void PlacementRanges::validate() const {
  if (!(scale_min > 0.0 && scale_min <= scale_max)) {
    throw ConfigError("scale range must satisfy 0 < min <= max");
  }
  if (!(opacity_min > 0.0 && opacity_min <= opacity_max && opacity_max <= 1.0)) {
    throw ConfigError("opacity range must satisfy 0 < min <= max <= 1");
  }
}

PlacementSpec sample_placement(RngStream& rng, int base_height, int base_width, int wm_height,
                               int wm_width, const PlacementRanges& ranges) {
  ranges.validate();
  auto fits = [&](double s) {
    const Footprint fp = footprint_for(base_width, wm_height, wm_width, s);
    return fp.height <= base_height && fp.width <= base_width;
  };
  if (!fits(ranges.scale_min)) {
    throw PlacementError("watermark " + std::to_string(wm_height) + "x" + std::to_string(wm_width) +
                         " cannot fit a " + std::to_string(base_height) + "x" +
                         std::to_string(base_width) + " base at the minimum scale");
  }
  // Largest admissible scale: the footprint width may not exceed the base
  // width and the aspect-preserved height may not exceed the base height.
  const double height_limit = static_cast<double>(base_height) * wm_width / wm_height / base_width;
  const double upper = std::max(ranges.scale_min, std::min({ranges.scale_max, 1.0, height_limit}));

  PlacementSpec spec;
  spec.scale = ranges.scale_min == ranges.scale_max ? ranges.scale_min
                                                    : rng.uniform(ranges.scale_min, upper);
  for (int attempt = 0; attempt < 64 && !fits(spec.scale); ++attempt) {
    spec.scale = rng.uniform(ranges.scale_min, upper);
  }
  if (!fits(spec.scale)) spec.scale = ranges.scale_min;
  spec.opacity = ranges.opacity_min == ranges.opacity_max
                     ? ranges.opacity_min
                     : rng.uniform(ranges.opacity_min, ranges.opacity_max);
  const Footprint fp = footprint_for(base_width, wm_height, wm_width, spec.scale);
  spec.top = static_cast<int>(rng.uniform_int(0, base_height - fp.height));
  spec.left = static_cast<int>(rng.uniform_int(0, base_width - fp.width));
  return spec;
}

std::vector<std::string> choose_train_ids(const std::vector<std::string>& ids, double split_ratio,
                                          std::uint64_t seed) {
  const std::size_t n = ids.size();
  auto n_train = static_cast<std::size_t>(std::lround(split_ratio * static_cast<double>(n)));
  if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  n_train = std::min(n_train, n);
  RngStream rng = RngStream(seed).derive("split");
  const auto order = shuffled_indices(n, rng);
  std::vector<std::string> train;
  for (std::size_t i = 0; i < n_train; ++i) train.push_back(ids[order[i]]);
  return train;
}

namespace {

std::string sample_name(const std::string& id, int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%05d.png", k);
  return id + buf;
}

}  // namespace

DatasetManifest build_dataset(const std::vector<fs::path>& bases,
                              const std::vector<WatermarkAsset>& watermarks,
                              const BuildOptions& options) {
  if (bases.empty()) throw ConfigError("build_dataset needs at least one base image");
  if (watermarks.empty()) throw ConfigError("build_dataset needs at least one watermark");
  if (!(options.split_ratio > 0.0 && options.split_ratio < 1.0)) {
    throw ConfigError("split_ratio must lie strictly between 0 and 1");
  }
  if (options.per_watermark < 0) throw ConfigError("per_watermark must be >= 0");
  options.ranges.validate();
  std::vector<std::string> ids;
  for (const auto& wm : watermarks) {
    wm.validate();
    if (std::find(ids.begin(), ids.end(), wm.id) != ids.end()) {
      throw ConfigError("duplicate watermark id '" + wm.id + "'");
    }
    ids.push_back(wm.id);
  }

  std::vector<Image> base_images;
  base_images.reserve(bases.size());
  for (const auto& b : bases) base_images.push_back(to_rgb(load_image(b)));

  const auto train_ids = choose_train_ids(ids, options.split_ratio, options.seed);
  auto split_of = [&](const std::string& id) {
    return std::find(train_ids.begin(), train_ids.end(), id) != train_ids.end() ? Split::train
                                                                                : Split::test;
  };

  const fs::path& root = options.output_root;
  for (const char* s : {"train", "test"}) {
    fs::create_directories(root / s / "x");
    fs::create_directories(root / s / "y");
  }

  const std::size_t per = static_cast<std::size_t>(options.per_watermark);
  const std::size_t total = per * watermarks.size();
  std::vector<std::optional<ManifestRow>> rows(total);
  std::vector<std::string> errors(total);
  const RngStream sample_root = RngStream(options.seed).derive("sample");

  auto make = [&](std::size_t idx) {
    const WatermarkAsset& wm = watermarks[idx / per];
    const int k = static_cast<int>(idx % per);
    RngStream rng = sample_root.derive(idx);
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      const auto bi = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(base_images.size()) - 1));
      const Image& base = base_images[bi];
      PlacementSpec spec;
      try {
        spec = sample_placement(rng, base.height(), base.width(), wm.image.height(),
                                wm.image.width(), options.ranges);
      } catch (const PlacementError& e) {
        errors[idx] = e.what();
        continue;
      }
      const Image x = composite(base, wm, spec);
      const Footprint fp = footprint_for(base.width(), wm.image.height(), wm.image.width(),
                                         spec.scale);
      ManifestRow row;
      row.split = split_of(wm.id);
      const std::string dir = to_string(row.split);
      const std::string name = sample_name(wm.id, k);
      row.x_path = dir + "/x/" + name;
      row.y_path = dir + "/y/" + name;
      row.watermark_id = wm.id;
      row.placement = spec;
      row.footprint_height = fp.height;
      row.footprint_width = fp.width;
      row.base_index = static_cast<int>(bi);
      save_image(x, root / row.x_path);
      save_image(base, root / row.y_path);
      rows[idx] = std::move(row);
      return;
    }
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1 || total < 2) {
    for (std::size_t i = 0; i < total; ++i) make(i);
  } else {
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = static_cast<std::size_t>(w); i < total;
               i += static_cast<std::size_t>(workers)) {
            make(i);
          }
        } catch (...) {
          failures[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  DatasetManifest manifest;
  manifest.seed = options.seed;
  manifest.root = root;
  nlohmann::json base_list = nlohmann::json::array();
  for (const auto& b : bases) base_list.push_back(b.string());
  manifest.config = {{"per_watermark", options.per_watermark},
                     {"split_ratio", options.split_ratio},
                     {"scale_range", {options.ranges.scale_min, options.ranges.scale_max}},
                     {"opacity_range", {options.ranges.opacity_min, options.ranges.opacity_max}},
                     {"max_retries", options.max_retries},
                     {"watermark_ids", ids},
                     {"train_ids", train_ids},
                     {"bases", base_list}};
  for (std::size_t i = 0; i < total; ++i) {
    if (rows[i]) {
      manifest.rows.push_back(std::move(*rows[i]));
    } else {
      std::clog << "skipped sample " << i << " (" << watermarks[i / per].id
                << "): " << errors[i] << '\n';
    }
  }
  write_manifest(manifest, root / "manifest.txt");
  return manifest;
}

}  // namespace wmr
