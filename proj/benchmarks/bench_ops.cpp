#include <benchmark/benchmark.h>

#include "wmr/ops.hpp"
#include "wmr/rng.hpp"

namespace {

using wmr::nn::Shape;
using wmr::nn::Tensor;

Tensor random_tensor(Shape s, std::uint64_t seed) {
  wmr::RngStream rng(seed);
  Tensor t(s);
  for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.normal();
  return t;
}

// Args: channels, side. A stride-2 4x4 encoder block doubling the channels.
void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const Tensor x = random_tensor({1, c, side, side}, 1);
  const Tensor w = random_tensor({2 * c, c, 4, 4}, 2);
  const Tensor b(Shape{1, 2 * c, 1, 1});
  for (auto _ : state) benchmark::DoNotOptimize(wmr::nn::conv2d(x, w, b, {}));
}
BENCHMARK(BM_Conv2dForward)->Args({16, 64})->Args({64, 32})->Args({128, 16});

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const Tensor x = random_tensor({1, c, side, side}, 1);
  const Tensor w = random_tensor({2 * c, c, 4, 4}, 2);
  const Tensor dy = random_tensor({1, 2 * c, side / 2, side / 2}, 3);
  Tensor dx;
  Tensor dw(w.shape());
  Tensor db(Shape{1, 2 * c, 1, 1});
  for (auto _ : state) {
    wmr::nn::conv2d_backward(x, w, {}, dy, &dx, &dw, &db);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({16, 64})->Args({64, 32})->Args({128, 16});

void BM_ConvTranspose2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const Tensor x = random_tensor({1, 2 * c, side / 2, side / 2}, 1);
  const Tensor w = random_tensor({2 * c, c, 4, 4}, 2);
  const Tensor b(Shape{1, c, 1, 1});
  for (auto _ : state) benchmark::DoNotOptimize(wmr::nn::conv_transpose2d(x, w, b, {}));
}
BENCHMARK(BM_ConvTranspose2dForward)->Args({16, 64})->Args({64, 32})->Args({128, 16});

void BM_InstanceNorm(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const Tensor x = random_tensor({4, c, 32, 32}, 1);
  const Tensor gamma(Shape{1, c, 1, 1}, 1.0);
  const Tensor beta(Shape{1, c, 1, 1});
  wmr::nn::NormCache cache;
  for (auto _ : state) benchmark::DoNotOptimize(wmr::nn::instance_norm(x, gamma, beta, &cache));
}
BENCHMARK(BM_InstanceNorm)->Arg(32)->Arg(128);

}  // namespace
