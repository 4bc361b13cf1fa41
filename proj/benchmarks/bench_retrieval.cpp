#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "swtrain/random.hpp"
#include "swtrain/retrieval.hpp"

namespace {

const std::vector<std::string> kVocabulary = {
    "rent",  "money", "job",    "family", "tired", "worried", "benefits", "office", "call",  "plan",
    "week",  "talk",  "friend", "school", "sleep", "angry",   "lonely",   "help",   "court", "payment"};

std::vector<std::string> documents(std::size_t n, swtrain::Rng& rng) {
  std::vector<std::string> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string d;
    const auto len = 8 + rng.uniform_index(24);
    for (std::uint64_t w = 0; w < len; ++w) d += kVocabulary[rng.uniform_index(kVocabulary.size())] + " ";
    docs.push_back(std::move(d));
  }
  return docs;
}

void BM_SparseBuild(benchmark::State& state) {
  swtrain::Rng rng(1);
  const auto docs = documents(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(swtrain::retrieval::SparseIndex::build(docs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SparseBuild)->Arg(100)->Arg(1000)->Arg(10000);

void BM_SparseTopK(benchmark::State& state) {
  swtrain::Rng rng(2);
  const auto index = swtrain::retrieval::SparseIndex::build(documents(static_cast<std::size_t>(state.range(0)), rng));
  const std::string query = "worried about rent and the benefits office payment";
  for (auto _ : state) benchmark::DoNotOptimize(index.retrieve_topk(query, 8));
}
BENCHMARK(BM_SparseTopK)->Arg(100)->Arg(1000)->Arg(10000);

void BM_DenseTopK(benchmark::State& state) {
  swtrain::Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> vectors(n, std::vector<double>(256));
  for (auto& v : vectors) {
    for (auto& x : v) x = rng.normal();
  }
  std::vector<double> query(256);
  for (auto& x : query) x = rng.normal();
  const auto index = swtrain::retrieval::EmbeddingIndex::from_vectors(std::move(vectors), "bench");
  for (auto _ : state) benchmark::DoNotOptimize(index.topk_by_vector(query, 8));
}
BENCHMARK(BM_DenseTopK)->Arg(1000)->Arg(10000);

}  // namespace
