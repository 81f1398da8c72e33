#include <benchmark/benchmark.h>

#include "ivcert/certifier.hpp"
#include "ivcert/interval_tensor.hpp"
#include "ivcert/model.hpp"
#include "ivcert/oracle.hpp"
#include "ivcert/rng.hpp"
#include "ivcert/trainer.hpp"

using namespace ivcert;

namespace {

IntervalTensor random_box(Rng& rng, Shape shape, double radius) {
  const std::size_t n = shape_size(shape);
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = rng.uniform(-1, 1);
    lo[i] = m - radius;
    hi[i] = m + radius;
  }
  return IntervalTensor::from_bounds(lo, hi, shape);
}

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.num_features = d;
  ds.features.resize(n * d);
  for (double& v : ds.features) v = rng.uniform();
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(rng.below(2)));
  return ds;
}

}  // namespace

static void BM_RumpMatmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a = random_box(rng, {n, n}, 1e-3);
  const auto b = random_box(rng, {n, n}, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(rump_matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_RumpMatmul)->RangeMultiplier(4)->Range(4, 256);

static void BM_ExactHull(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto a = random_box(rng, {n, n}, 1e-3);
  const auto b = random_box(rng, {n, n}, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(exact_matmul_hull(a, b));
}
BENCHMARK(BM_ExactHull)->RangeMultiplier(4)->Range(4, 64);

// One interval SGD step on a batch of 100 for an input -> 20 -> 1 MLP
// (2 inputs: Two-Moons, 784 inputs: MNIST).
static void BM_SgdStep(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Architecture arch;
  arch.input_size = d;
  arch.hidden_sizes = {20};
  IntervalModel model = lift_to_interval(init_point_model(arch, 3));
  const Dataset ds = random_dataset(100, d, 4);
  std::vector<std::size_t> rows(100);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const IntervalTensor x = inflate_batch(ds, rows, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(sgd_step(model, x, ds.labels, 1e-6));
}
BENCHMARK(BM_SgdStep)->Arg(2)->Arg(784)->Unit(benchmark::kMicrosecond);

static void BM_CertifiedAccuracy(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Architecture arch;
  arch.input_size = d;
  arch.hidden_sizes = {20};
  const IntervalModel model = lift_to_interval(init_point_model(arch, 5));
  const Dataset ds = random_dataset(1000, d, 6);
  for (auto _ : state) benchmark::DoNotOptimize(certified_accuracy(model, ds, 1e-3));
}
BENCHMARK(BM_CertifiedAccuracy)->Arg(2)->Arg(784)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
