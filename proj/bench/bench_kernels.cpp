// Serial reference vs OpenMP kernels, plus one forward/backward pass of a
// full-size network (314 inputs, 200 LSTM units, two 300-unit ReLU layers) on each backend.
#include <benchmark/benchmark.h>

#include "stance/kernels.hpp"
#include "stance/neuralnet.hpp"
#include "stance/rng.hpp"

namespace {

using namespace stance;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

template <void (*Gemm)(ConstMatrixView, ConstMatrixView, MatrixView)>
void BM_gemm_nt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    Gemm(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <void (*Gemm)(ConstMatrixView, ConstMatrixView, MatrixView)>
void BM_gemm_tn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 3), b = random_matrix(n, n, 4);
  Matrix c(n, n);
  for (auto _ : state) {
    Gemm(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

BENCHMARK(BM_gemm_nt<kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_gemm_nt<kernels::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_gemm_tn<kernels::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_gemm_tn<kernels::parallel::gemm_tn>)->Name("gemm_tn/parallel")->Arg(64)->Arg(256)->Arg(512);

PaddedBatch random_batch(std::size_t branches, std::size_t len, std::size_t dim) {
  PaddedBatch batch(branches, len, dim);
  Rng rng(9);
  for (double& v : batch.inputs) v = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < branches * len; ++i) {
    batch.pad_mask[i] = 1;
    batch.loss_mask[i] = 1;
    batch.labels[i] = static_cast<int>(rng.index(kNumClasses));
  }
  return batch;
}

void BM_train_step(benchmark::State& state) {
  const auto b = state.range(0) == 0 ? kernels::Backend::Serial : kernels::Backend::Parallel;
  kernels::BackendGuard guard(b);
  Architecture arch{314, {200}, {300, 300}, 0.5};
  const ModelParams params = init_params(arch, 1);
  const PaddedBatch batch = random_batch(32, 6, arch.feature_dim);
  for (auto _ : state) {
    ForwardResult fwd = forward_branch(batch, params, Mode::Train, 3);
    ModelParams g = backward(fwd.cache, batch.labels, batch.loss_mask, params, 1e-4);
    benchmark::DoNotOptimize(g.output_layer.biases.data());
  }
}
BENCHMARK(BM_train_step)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
