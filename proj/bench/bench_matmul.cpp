// Serial reference vs OpenMP execution of the slot kernels and of the
// Double Volley Revolver product.

#include <benchmark/benchmark.h>

#include <random>

#include "revolver/matmul.hpp"

using namespace revolver;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

std::vector<double> random_slots(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_MulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_slots(n, 1), b = random_slots(n, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    he::kernels::serial::mul(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_MulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_slots(n, 1), b = random_slots(n, 2);
  std::vector<double> out(n);
  for (auto _ : state) {
    he::kernels::mul(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_RotateSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_slots(n, 3);
  std::vector<double> out(n);
  for (auto _ : state) {
    he::kernels::serial::rotate(a, 513, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_RotateParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_slots(n, 3);
  std::vector<double> out(n);
  for (auto _ : state) {
    he::kernels::rotate(a, 513, out);
    benchmark::DoNotOptimize(out.data());
  }
}

// 128x401 times 401x10 at full-scale parameters: two A blocks, one Bᵀ block.
void BM_DvrMult(benchmark::State& state, mm::Exec exec) {
  he::Evaluator ev(he::HEParams::full_scale());
  const auto plan = mm::plan_matmul(ev.params(), 128, 401, 10);
  const auto a = enc::pack_row_major(ev, random_matrix(128, 401, 4), plan.padded_cols);
  const auto bt = enc::pack_replicated(ev, random_matrix(10, 401, 5), plan.padded_cols);
  for (auto _ : state) {
    auto c = mm::dvr_mult(ev, a, bt, {.exec = exec});
    benchmark::DoNotOptimize(c.cts.data());
  }
}

}  // namespace

BENCHMARK(BM_MulSerial)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_MulParallel)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_RotateSerial)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_RotateParallel)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK_CAPTURE(BM_DvrMult, serial, mm::Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_DvrMult, parallel, mm::Exec::parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
