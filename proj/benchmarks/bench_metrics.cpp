#include <benchmark/benchmark.h>

#include "wmr/metrics.hpp"
#include "wmr/procedural.hpp"
#include "wmr/rng.hpp"

namespace {

void BM_Ssim(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const wmr::Image a = wmr::procedural_base(wmr::RngStream(1), side, side);
  const wmr::Image b = wmr::procedural_base(wmr::RngStream(2), side, side);
  for (auto _ : state) benchmark::DoNotOptimize(wmr::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_Psnr(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const wmr::Image a = wmr::procedural_base(wmr::RngStream(1), side, side);
  const wmr::Image b = wmr::procedural_base(wmr::RngStream(2), side, side);
  for (auto _ : state) benchmark::DoNotOptimize(wmr::psnr(a, b));
}
BENCHMARK(BM_Psnr)->Arg(256);

}  // namespace
