#include "wmr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "wmr/errors.hpp"

namespace wmr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'W', 'M', 'R', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoints are little endian");

struct Group {
  const char* name;
  const nn::ParamSet* set;
};

json describe(const nn::ParamSet& set) {
  json arr = json::array();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const nn::Shape s = set[i].shape();
    arr.push_back({{"name", set.name(i)}, {"shape", {s.n, s.c, s.h, s.w}}});
  }
  return arr;
}

nn::ParamSet read_set(std::istream& in, const json& layout, const fs::path& path) {
  nn::ParamSet set;
  for (const auto& entry : layout) {
    const auto dims = entry.at("shape").get<std::vector<int>>();
    if (dims.size() != 4) throw DataError("bad tensor shape in " + path.string());
    nn::Tensor t(nn::Shape{dims[0], dims[1], dims[2], dims[3]});
    auto d = t.data();
    in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size_bytes()));
    if (!in) throw DataError("truncated checkpoint " + path.string());
    set.add(entry.at("name").get<std::string>(), std::move(t));
  }
  return set;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  const Group groups[] = {
      {"generator", &ckpt.generator.tensors},
      {"discriminator", &ckpt.discriminator.tensors},
      {"generator_m", &ckpt.generator_optimizer.first_moment},
      {"generator_v", &ckpt.generator_optimizer.second_moment},
      {"discriminator_m", &ckpt.discriminator_optimizer.first_moment},
      {"discriminator_v", &ckpt.discriminator_optimizer.second_moment},
  };
  json tensors = json::object();
  for (const auto& g : groups) tensors[g.name] = describe(*g.set);
  const json header = {
      {"config", to_json(ckpt.config)},
      {"generator_config", to_json(ckpt.generator.config)},
      {"discriminator_config", to_json(ckpt.discriminator.config)},
      {"step", ckpt.step},
      {"generator_optimizer_steps", ckpt.generator_optimizer.steps},
      {"discriminator_optimizer_steps", ckpt.discriminator_optimizer.steps},
      {"rng", {{"seed", ckpt.rng.seed()}, {"counter", ckpt.rng.counter()}}},
      {"tensors", tensors},
  };
  const std::string text = header.dump();

  if (!path.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& g : groups) {
      for (std::size_t i = 0; i < g.set->size(); ++i) {
        const auto d = (*g.set)[i].data();
        out.write(reinterpret_cast<const char*>(d.data()),
                  static_cast<std::streamsize>(d.size_bytes()));
      }
    }
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("checkpoint not found: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file: " + path.string());
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1ULL << 30)) throw DataError("corrupt checkpoint header " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint " + path.string());

  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.config = train_config_from_json(header.at("config"));
    ckpt.generator.config = generator_config_from_json(header.at("generator_config"));
    ckpt.discriminator.config = discriminator_config_from_json(header.at("discriminator_config"));
    ckpt.step = header.at("step").get<std::int64_t>();
    ckpt.generator_optimizer.steps = header.at("generator_optimizer_steps").get<std::int64_t>();
    ckpt.discriminator_optimizer.steps =
        header.at("discriminator_optimizer_steps").get<std::int64_t>();
    ckpt.rng = RngStream(header.at("rng").at("seed").get<std::uint64_t>());
    ckpt.rng.set_counter(header.at("rng").at("counter").get<std::uint64_t>());
    const json& t = header.at("tensors");
    ckpt.generator.tensors = read_set(in, t.at("generator"), path);
    ckpt.discriminator.tensors = read_set(in, t.at("discriminator"), path);
    ckpt.generator_optimizer.first_moment = read_set(in, t.at("generator_m"), path);
    ckpt.generator_optimizer.second_moment = read_set(in, t.at("generator_v"), path);
    ckpt.discriminator_optimizer.first_moment = read_set(in, t.at("discriminator_m"), path);
    ckpt.discriminator_optimizer.second_moment = read_set(in, t.at("discriminator_v"), path);
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace wmr
