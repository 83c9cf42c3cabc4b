#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>

#include "lqpg/encoding.hpp"
#include "lqpg/gradient.hpp"
#include "lqpg/linalg.hpp"
#include "lqpg/lqr.hpp"
#include "lqpg/lyapunov.hpp"
#include "lqpg/problems.hpp"

using lqpg::Matrix;

static void BM_Expm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix a = lqpg::random_hurwitz_matrix(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lqpg::matrix_exponential(a));
}
BENCHMARK(BM_Expm)->RangeMultiplier(2)->Range(2, 32);

static void BM_LyapunovDirect(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix a = lqpg::random_hurwitz_matrix(n, 2);
  const Matrix omega = lqpg::random_spd(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(lqpg::solve_lyapunov_direct(a, omega));
}
BENCHMARK(BM_LyapunovDirect)->RangeMultiplier(2)->Range(2, 32)->Unit(benchmark::kMicrosecond);

// Second argument is -log10(eps).
static void BM_LyapunovQuadrature(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const double eps = std::pow(10.0, -static_cast<double>(state.range(1)));
  const Matrix a = lqpg::random_hurwitz_matrix(n, 2);
  const Matrix omega = lqpg::random_spd(n, 3);
  long nodes = 0;
  for (auto _ : state) {
    const auto sol = lqpg::solve_lyapunov_quadrature(a, omega, eps);
    nodes = *sol.nodes;
    benchmark::DoNotOptimize(sol);
  }
  state.counters["nodes"] = static_cast<double>(nodes);
}
BENCHMARK(BM_LyapunovQuadrature)
    ->ArgsProduct({{2, 4, 8}, {3, 5}})
    ->Unit(benchmark::kMillisecond);

static void BM_ExactGradient(benchmark::State& state) {
  const auto prob = lqpg::make_mass_spring(static_cast<int>(state.range(0)));
  const auto k0 = lqpg::initial_stabilizing_gain(prob);
  for (auto _ : state) benchmark::DoNotOptimize(lqpg::exact_gradient(prob, k0));
}
BENCHMARK(BM_ExactGradient)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);

static void BM_RobustGradient(benchmark::State& state) {
  const auto prob = lqpg::make_mass_spring(static_cast<int>(state.range(0)));
  const auto k0 = lqpg::initial_stabilizing_gain(prob);
  const double gnorm = lqpg::exact_gradient(prob, k0).norm();
  const auto budget = lqpg::split_budget(gnorm, 0.1, 1.0, lqpg::ResidualRule::kConservative);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(lqpg::robust_gradient(prob, k0, budget, seed++));
}
BENCHMARK(BM_RobustGradient)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);

static void BM_TwoPoint(benchmark::State& state) {
  const auto prob = lqpg::make_mass_spring(static_cast<int>(state.range(0)));
  const auto k0 = lqpg::initial_stabilizing_gain(prob);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(lqpg::two_point_estimator(prob, k0, 1e-4, 1, seed++));
}
BENCHMARK(BM_TwoPoint)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);

static void BM_VerifyEncoding(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix a = lqpg::random_hurwitz_matrix(n, 4);
  const Matrix omega = lqpg::random_spd(n, 5);
  lqpg::EncodingVerifyOptions opts;
  opts.throw_on_failure = false;
  for (auto _ : state) benchmark::DoNotOptimize(lqpg::verify_lyapunov_encoding(a, omega, 1e-2, opts));
}
BENCHMARK(BM_VerifyEncoding)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
