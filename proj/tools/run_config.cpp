#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>

#include "wmr/errors.hpp"

namespace wmr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void read_path(const json& j, const char* key, fs::path& out, const fs::path& base) {
  std::string s;
  read(j, key, s);
  if (s.empty()) return;
  const fs::path p(s);
  out = p.is_absolute() || base.empty() ? p : base / p;
}

SynthesisConfig synthesis_from_json(const json& j, const fs::path& base) {
  check_keys(j,
             {"bases_dir", "procedural_bases", "base_side", "watermarks_dir",
              "procedural_watermarks", "watermark_height", "watermark_width", "per_watermark",
              "split_ratio", "ranges", "workers", "max_retries"},
             "synthesis");
  SynthesisConfig s;
  read_path(j, "bases_dir", s.bases_dir, base);
  read(j, "procedural_bases", s.procedural_bases);
  read(j, "base_side", s.base_side);
  read_path(j, "watermarks_dir", s.watermarks_dir, base);
  read(j, "procedural_watermarks", s.procedural_watermarks);
  read(j, "watermark_height", s.watermark_height);
  read(j, "watermark_width", s.watermark_width);
  read(j, "per_watermark", s.per_watermark);
  read(j, "split_ratio", s.split_ratio);
  read(j, "workers", s.workers);
  read(j, "max_retries", s.max_retries);
  if (j.contains("ranges")) {
    const json& r = j.at("ranges");
    check_keys(r, {"scale_min", "scale_max", "opacity_min", "opacity_max"}, "ranges");
    read(r, "scale_min", s.ranges.scale_min);
    read(r, "scale_max", s.ranges.scale_max);
    read(r, "opacity_min", s.ranges.opacity_min);
    read(r, "opacity_max", s.ranges.opacity_max);
  }
  return s;
}

json to_json(const SynthesisConfig& s) {
  return {{"bases_dir", s.bases_dir.string()},
          {"procedural_bases", s.procedural_bases},
          {"base_side", s.base_side},
          {"watermarks_dir", s.watermarks_dir.string()},
          {"procedural_watermarks", s.procedural_watermarks},
          {"watermark_height", s.watermark_height},
          {"watermark_width", s.watermark_width},
          {"per_watermark", s.per_watermark},
          {"split_ratio", s.split_ratio},
          {"ranges",
           {{"scale_min", s.ranges.scale_min},
            {"scale_max", s.ranges.scale_max},
            {"opacity_min", s.ranges.opacity_min},
            {"opacity_max", s.ranges.opacity_max}}},
          {"workers", s.workers},
          {"max_retries", s.max_retries}};
}

}  // namespace

void RunConfig::finalize() {
  train.seed = seed;
  train.validate();
  synthesis.ranges.validate();
  if (synthesis.per_watermark < 0) throw ConfigError("per_watermark must be >= 0");
  if (synthesis.procedural_bases < 1 && synthesis.bases_dir.empty()) {
    throw ConfigError("procedural_bases must be >= 1");
  }
  if (synthesis.watermark_height < 1 || synthesis.watermark_width < 1) {
    throw ConfigError("watermark size must be positive");
  }
  if (synthesis.base_side < 0) throw ConfigError("base_side must be >= 0");
  if (eval_workers < 1) throw ConfigError("evaluation workers must be >= 1");
  if (ablation_losses.empty() && ablation_discriminators.empty()) {
    throw ConfigError("ablation needs at least one variant");
  }
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  check_keys(j,
             {"seed", "train", "synthesis", "dataset_dir", "manifest", "output_dir", "evaluation",
              "ablation"},
             "config");
  RunConfig c;
  read(j, "seed", c.seed);
  if (j.contains("train")) {
    const json& t = j.at("train");
    if (t.is_object() && t.contains("seed")) {
      throw ConfigError("set the seed at the top level, not inside 'train'");
    }
    c.train = train_config_from_json(t);
    const fs::path& asset = c.train.extractor.asset_path;
    if (!asset.empty() && asset.is_relative() && !base_dir.empty()) {
      c.train.extractor.asset_path = base_dir / asset;
    }
  }
  if (j.contains("synthesis")) c.synthesis = synthesis_from_json(j.at("synthesis"), base_dir);
  if (!base_dir.empty()) {
    c.dataset_dir = base_dir / c.dataset_dir;
    c.output_dir = base_dir / c.output_dir;
  }
  read_path(j, "dataset_dir", c.dataset_dir, base_dir);
  read_path(j, "manifest", c.manifest, base_dir);
  read_path(j, "output_dir", c.output_dir, base_dir);
  if (j.contains("evaluation")) {
    check_keys(j.at("evaluation"), {"workers"}, "evaluation");
    read(j.at("evaluation"), "workers", c.eval_workers);
  }
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    check_keys(a, {"losses", "discriminators"}, "ablation");
    try {
      if (a.contains("losses")) {
        c.ablation_losses.clear();
        for (const auto& s : a.at("losses")) {
          c.ablation_losses.push_back(parse_loss_config(s.get<std::string>()));
        }
      }
      if (a.contains("discriminators")) {
        c.ablation_discriminators.clear();
        for (const auto& s : a.at("discriminators")) {
          c.ablation_discriminators.push_back(parse_discriminator_kind(s.get<std::string>()));
        }
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad ablation section: ") + e.what());
    }
  }
  c.train.seed = c.seed;
  return c;
}

json to_json(const RunConfig& c) {
  json train = wmr::to_json(c.train);
  train.erase("seed");
  json losses = json::array();
  for (LossConfig l : c.ablation_losses) losses.push_back(to_string(l));
  json kinds = json::array();
  for (DiscriminatorKind k : c.ablation_discriminators) kinds.push_back(to_string(k));
  return {{"seed", c.seed},
          {"train", train},
          {"synthesis", to_json(c.synthesis)},
          {"dataset_dir", c.dataset_dir.string()},
          {"manifest", c.manifest.string()},
          {"output_dir", c.output_dir.string()},
          {"evaluation", {{"workers", c.eval_workers}}},
          {"ablation", {{"losses", losses}, {"discriminators", kinds}}}};
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("config not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

void apply_environment(RunConfig& c) {
  if (const char* p = std::getenv(kExtractorPathEnv); p != nullptr && *p != '\0') {
    c.train.extractor.asset_path = p;
  }
}

}  // namespace wmr::cli
