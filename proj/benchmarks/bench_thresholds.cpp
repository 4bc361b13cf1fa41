#include <benchmark/benchmark.h>

#include "swtrain/random.hpp"
#include "swtrain/thresholds.hpp"

namespace {

using namespace swtrain::thresholds;

ConfidenceMatrix matrix(std::size_t rows) {
  swtrain::Rng rng(11);
  ConfidenceMatrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    m.keys.push_back("s#" + std::to_string(i));
    std::vector<double> row(20);
    swtrain::domain::SkillSet truth;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const bool positive = rng.uniform01() < 0.15;
      if (positive) truth.set(j + 1);
      row[j] = positive ? 0.3 + 0.7 * rng.uniform01() : 0.6 * rng.uniform01();
    }
    if (truth.none()) truth.set(0);
    m.scores.push_back(std::move(row));
    m.truths.push_back(truth);
  }
  return m;
}

void BM_Evaluate(benchmark::State& state) {
  const auto m = matrix(static_cast<std::size_t>(state.range(0)));
  const ObjectiveEvaluator eval(m, Objective::kMicroF1);
  const std::vector<double> t(20, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(eval(t));
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(1000);

void BM_Static(benchmark::State& state) {
  const auto m = matrix(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(optimize_static(m));
}
BENCHMARK(BM_Static)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_JointGa(benchmark::State& state) {
  const auto m = matrix(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(optimize_joint_ga(m, Objective::kMicroF1, {}, 1));
}
BENCHMARK(BM_JointGa)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
