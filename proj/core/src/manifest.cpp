#include "wmr/manifest.hpp"

#include <fstream>
#include <sstream>

#include "wmr/errors.hpp"

namespace wmr {

namespace {

constexpr const char* kFormat = "wmr-manifest";
constexpr int kVersion = 1;

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + s + "'");
}

}  // namespace

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

std::vector<ManifestRow> DatasetManifest::rows_in(Split s) const {
  std::vector<ManifestRow> out;
  for (const auto& r : rows) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

std::set<std::string> DatasetManifest::watermark_ids(Split s) const {
  std::set<std::string> ids;
  for (const auto& r : rows) {
    if (r.split == s) ids.insert(r.watermark_id);
  }
  return ids;
}

std::string serialize_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  const nlohmann::json header = {
      {"format", kFormat}, {"version", kVersion}, {"seed", m.seed}, {"config", m.config}};
  out << header.dump() << '\n';
  for (const auto& r : m.rows) {
    const nlohmann::json row = {{"split", to_string(r.split)},
                                {"x", r.x_path},
                                {"y", r.y_path},
                                {"watermark_id", r.watermark_id},
                                {"top", r.placement.top},
                                {"left", r.placement.left},
                                {"scale", r.placement.scale},
                                {"opacity", r.placement.opacity},
                                {"footprint_height", r.footprint_height},
                                {"footprint_width", r.footprint_width},
                                {"base_index", r.base_index}};
    out << row.dump() << '\n';
  }
  return out.str();
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != kFormat) throw DataError("not a wmr manifest");
        if (j.value("version", 0) != kVersion) throw DataError("unsupported manifest version");
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = j.value("config", nlohmann::json::object());
        have_header = true;
        continue;
      }
      ManifestRow r;
      r.split = parse_split(j.at("split").get<std::string>());
      r.x_path = j.at("x").get<std::string>();
      r.y_path = j.at("y").get<std::string>();
      r.watermark_id = j.at("watermark_id").get<std::string>();
      r.placement.top = j.at("top").get<int>();
      r.placement.left = j.at("left").get<int>();
      r.placement.scale = j.at("scale").get<double>();
      r.placement.opacity = j.at("opacity").get<double>();
      r.footprint_height = j.value("footprint_height", 0);
      r.footprint_width = j.value("footprint_width", 0);
      r.base_index = j.value("base_index", 0);
      m.rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest at line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw DataError("manifest has no header line");
  const auto test_ids = m.watermark_ids(Split::test);
  for (const auto& id : m.watermark_ids(Split::train)) {
    if (test_ids.count(id)) throw DataError("watermark '" + id + "' appears in both splits");
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << serialize_manifest(m);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("manifest not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

}  // namespace wmr
