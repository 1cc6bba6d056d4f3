// Serial reference vs OpenMP kernels on synthetic inputs.

#include <random>

#include <benchmark/benchmark.h>

#include "urbanprof/kernels.hpp"
#include "urbanprof/linalg.hpp"

namespace {

using urbanprof::Matrix;
namespace kernels = urbanprof::kernels;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = u(rng);
  return m;
}

template <Matrix (*F)(const Matrix&)>
void BM_Cosine(benchmark::State& state) {
  const Matrix rows = random_matrix(static_cast<std::size_t>(state.range(0)), 10, 1);
  for (auto _ : state) benchmark::DoNotOptimize(F(rows));
  state.SetComplexityN(state.range(0));
}

template <void (*F)(const Matrix&, const Matrix&, std::span<std::size_t>, std::span<double>)>
void BM_Assign(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix points = random_matrix(n, 8, 2);
  const Matrix centroids = random_matrix(20, 8, 3);
  std::vector<std::size_t> labels(n);
  std::vector<double> dist(n);
  for (auto _ : state) {
    F(points, centroids, labels, dist);
    benchmark::DoNotOptimize(labels.data());
  }
}

template <std::vector<double> (*F)(const Matrix&, const Matrix&, std::span<const std::ptrdiff_t>)>
void BM_Nearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix data = random_matrix(n, 10, 4);
  const Matrix queries = random_matrix(n / 10 + 1, 10, 5);
  for (auto _ : state) benchmark::DoNotOptimize(F(data, queries, {}));
}

template <Matrix (*F)(const Matrix&, const std::vector<std::vector<std::size_t>>&)>
void BM_SumMembers(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix rows = random_matrix(n, 200, 6);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < 25; ++d) members[i].push_back((i + d * 37) % n);
  for (auto _ : state) benchmark::DoNotOptimize(F(rows, members));
}

void BM_SymEig(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix m = random_matrix(n, n, 7);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  for (auto _ : state) benchmark::DoNotOptimize(urbanprof::sym_eig(m, 21));
}

}  // namespace

BENCHMARK(BM_Cosine<kernels::serial::cosine_similarity_matrix>)->Name("cosine/serial")->Arg(400)->Arg(2000);
BENCHMARK(BM_Cosine<kernels::omp::cosine_similarity_matrix>)->Name("cosine/omp")->Arg(400)->Arg(2000);
BENCHMARK(BM_Assign<kernels::serial::assign_nearest>)->Name("assign/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Assign<kernels::omp::assign_nearest>)->Name("assign/omp")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Nearest<kernels::serial::nearest_neighbor_distances>)->Name("nearest/serial")->Arg(2000)->Arg(10000);
BENCHMARK(BM_Nearest<kernels::omp::nearest_neighbor_distances>)->Name("nearest/omp")->Arg(2000)->Arg(10000);
BENCHMARK(BM_SumMembers<kernels::serial::sum_member_rows>)->Name("sum_members/serial")->Arg(2500)->Arg(10000);
BENCHMARK(BM_SumMembers<kernels::omp::sum_member_rows>)->Name("sum_members/omp")->Arg(2500)->Arg(10000);
BENCHMARK(BM_SymEig)->Name("sym_eig")->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
