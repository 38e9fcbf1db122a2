#pragma once

#include <cstdint>
#include <filesystem>

#include "wmr/discriminator.hpp"
#include "wmr/generator.hpp"
#include "wmr/rng.hpp"
#include "wmr/tensor.hpp"
#include "wmr/train_config.hpp"

namespace wmr {

struct AdamState {
  nn::ParamSet first_moment;
  nn::ParamSet second_moment;
  std::int64_t steps = 0;
};

/// Everything needed to continue a run exactly where it stopped.
struct Checkpoint {
  TrainConfig config;
  GeneratorParams generator;
  DiscriminatorParams discriminator;
  AdamState generator_optimizer;
  AdamState discriminator_optimizer;
  std::int64_t step = 0;
  RngStream rng;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container:
///   "WMRCKPT\0" | u32 version | u64 header length | JSON header
///   | float64 tensor payload in header order
/// The header holds the config snapshot, step, RNG state and the name and
/// shape of every tensor. Written to a temporary file and renamed into place.
/// Throws IoError.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws FileNotFoundError, DataError (bad magic, version, or truncation).
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wmr
