// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "mf/reference.hpp"
#include "mf/rng.hpp"
#include "mf/tensorops.hpp"

namespace {

mf::ConvKernel random_kernel(std::size_t out, std::size_t in, std::size_t dilation, mf::Rng& rng) {
  mf::ConvKernel k = mf::ConvKernel::zeros(out, in, 3);
  k.dilation = dilation;
  for (double& w : k.weights) w = rng.normal();
  return k;
}

void BM_Conv2d(benchmark::State& state) {
  mf::Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const mf::ImageTensor x = mf::gaussian_noise({16, n, n}, rng);
  const mf::ConvKernel k = random_kernel(16, 16, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mf::conv2d(x, k));
}
BENCHMARK(BM_Conv2d)->Arg(32)->Arg(64);

void BM_Conv2dReference(benchmark::State& state) {
  mf::Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const mf::ImageTensor x = mf::gaussian_noise({16, n, n}, rng);
  const mf::ConvKernel k = random_kernel(16, 16, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mf::reference::conv2d(x, k));
}
BENCHMARK(BM_Conv2dReference)->Arg(32)->Arg(64);

void BM_Resample(benchmark::State& state) {
  mf::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const mf::ImageTensor x = mf::gaussian_noise({3, n, n}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mf::resample(x, mf::ResampleMethod::bicubic_gaussian, 2 * n, 2 * n));
  }
}
BENCHMARK(BM_Resample)->Arg(64)->Arg(128);

void BM_ResampleReference(benchmark::State& state) {
  mf::Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const mf::ImageTensor x = mf::gaussian_noise({3, n, n}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mf::reference::resample(x, mf::ResampleMethod::bicubic_gaussian, 2 * n, 2 * n));
  }
}
BENCHMARK(BM_ResampleReference)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
