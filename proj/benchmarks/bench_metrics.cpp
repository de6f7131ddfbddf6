#include <benchmark/benchmark.h>

#include <vector>

#include "onn/metrics.hpp"
#include "onn/numerics.hpp"

namespace {

void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  onn::SeededRng rng(3);
  std::vector<std::uint8_t> labels(n);
  std::vector<double> scores(n);
  for (std::size_t k = 0; k < n; ++k) {
    labels[k] = static_cast<std::uint8_t>(rng.uniform_index(2));
    scores[k] = rng.uniform(0.0, 1.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(onn::auc(labels, scores));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_Auc)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity(benchmark::oNLogN);
