#include <benchmark/benchmark.h>

#include "wmr/generator.hpp"
#include "wmr/rng.hpp"

namespace {

wmr::GeneratorConfig config(int base, int side) {
  wmr::GeneratorConfig cfg;
  cfg.base_channels = base;
  cfg.input_side = side;
  cfg.depth = 6;
  return cfg;
}

wmr::nn::Tensor input(int batch, int side) {
  wmr::RngStream rng(7);
  wmr::nn::Tensor x({batch, 3, side, side});
  for (std::size_t i = 0; i < x.numel(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  return x;
}

// Args: base channels, side.
void BM_GeneratorForward(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto params = wmr::init_generator(cfg, wmr::RngStream(1));
  const auto x = input(1, cfg.input_side);
  for (auto _ : state) benchmark::DoNotOptimize(wmr::generator_forward(params, x));
}
BENCHMARK(BM_GeneratorForward)->Args({8, 64})->Args({32, 64})->Unit(benchmark::kMillisecond);

void BM_GeneratorForwardBackward(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto params = wmr::init_generator(cfg, wmr::RngStream(1));
  const auto x = input(1, cfg.input_side);
  auto grads = params.tensors.zeros_like();
  for (auto _ : state) {
    wmr::GeneratorTape tape;
    const auto y = wmr::generator_forward(params, x, &tape);
    benchmark::DoNotOptimize(wmr::generator_backward(params, tape, y, grads));
  }
}
BENCHMARK(BM_GeneratorForwardBackward)->Args({8, 64})->Args({32, 64})->Unit(benchmark::kMillisecond);

}  // namespace
