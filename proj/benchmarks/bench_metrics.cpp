#include <benchmark/benchmark.h>

#include <vector>

#include "swtrain/metrics.hpp"
#include "swtrain/random.hpp"

namespace {

std::vector<swtrain::eval::PredictionRecord> records(std::size_t n) {
  swtrain::Rng rng(7);
  std::vector<swtrain::eval::PredictionRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].key = "s#" + std::to_string(i);
    for (std::size_t j = 0; j < 21; ++j) {
      if (rng.uniform01() < 0.15) out[i].predicted.set(j);
      if (rng.uniform01() < 0.15) out[i].ground_truth.set(j);
    }
  }
  return out;
}

void BM_Report(benchmark::State& state) {
  const auto recs = records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(swtrain::eval::compute_report(recs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Report)->Arg(1000)->Arg(100000);

void BM_FocalLoss(benchmark::State& state) {
  double p = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(swtrain::eval::focal_loss(p, true));
    p = p > 0.98 ? 0.01 : p + 0.01;
  }
}
BENCHMARK(BM_FocalLoss);

}  // namespace
