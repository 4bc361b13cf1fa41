#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "swtrain/corpus.hpp"

namespace swtrain::llm {
class Gateway;
}

namespace swtrain::retrieval {

// Text indexed for a (client, worker) pair, and the query text for
// classifying a worker utterance given the client utterance it answers.
std::string pair_text(std::string_view client, std::string_view worker);

// Demonstrations available to in-context classification; built from the
// training split only.
struct DemonstrationPool {
  std::vector<corpus::AnnotatedTurn> entries;

  static DemonstrationPool from_corpus(const corpus::TranscriptCorpus& train);

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::string index_text(std::size_t ordinal) const {
    return pair_text(entries[ordinal].client_text, entries[ordinal].worker_text);
  }
  std::vector<std::string> index_texts() const;
};

struct ScoredEntry {
  std::size_t ordinal = 0;
  double score = 0.0;

  bool operator==(const ScoredEntry&) const = default;
};

// Descending score, ties by ascending ordinal; keeps the first k.
std::vector<ScoredEntry> rank_topk(std::span<const double> scores, std::size_t k);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Okapi BM25 over an inverted index. Scoring, for each query token t (repeats
// included):
//   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
// with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
class SparseIndex {
 public:
  static SparseIndex build(std::span<const std::string> documents, Bm25Params params = {});
  static SparseIndex build(const DemonstrationPool& pool, Bm25Params params = {});

  // min(k, N) entries. Throws Error{kInvalidArgument} when k == 0.
  std::vector<ScoredEntry> retrieve_topk(std::string_view query, std::size_t k) const;
  // Scores of every document, by ordinal.
  std::vector<double> score_all(std::string_view query) const;

  std::size_t doc_count() const { return lengths_.size(); }
  double average_length() const { return avgdl_; }
  std::uint32_t doc_length(std::size_t ordinal) const { return lengths_.at(ordinal); }
  std::uint32_t document_frequency(const std::string& term) const;
  std::uint32_t term_frequency(std::size_t ordinal, const std::string& term) const;
  double idf(const std::string& term) const;
  const Bm25Params& params() const { return params_; }

  // JSON snapshot; deserialize(serialize()) restores identical statistics.
  std::string serialize() const;
  static SparseIndex deserialize(std::string_view snapshot);

  bool operator==(const SparseIndex&) const = default;

 private:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
    bool operator==(const Posting&) const = default;
  };

  Bm25Params params_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;  // sorted by doc
  std::vector<std::uint32_t> lengths_;
  double avgdl_ = 0.0;
};

inline bool operator==(const Bm25Params& a, const Bm25Params& b) { return a.k1 == b.k1 && a.b == b.b; }

using QueryEmbedder = std::function<std::vector<double>(const std::string&)>;

// Embeds through the gateway (and therefore its cache).
QueryEmbedder gateway_embedder(const llm::Gateway& gateway);

// Exact cosine search over unit-norm vectors.
class EmbeddingIndex {
 public:
  static EmbeddingIndex from_vectors(std::vector<std::vector<double>> vectors, std::string model_id);
  static EmbeddingIndex build(const DemonstrationPool& pool, const llm::Gateway& gateway);

  // Cosine similarity against every entry; query need not be normalized.
  // Throws Error{kDimensionMismatch}.
  std::vector<double> similarities(std::span<const double> query) const;
  std::vector<ScoredEntry> topk_by_vector(std::span<const double> query, std::size_t k) const;
  std::vector<ScoredEntry> dense_topk(const std::string& query, std::size_t k,
                                      const QueryEmbedder& embed) const;

  std::size_t size() const { return vectors_.size(); }
  std::size_t dimension() const { return dim_; }
  const std::string& model_id() const { return model_id_; }
  const std::vector<double>& vector(std::size_t ordinal) const { return vectors_.at(ordinal); }

  std::string serialize() const;
  static EmbeddingIndex deserialize(std::string_view snapshot);

 private:
  std::vector<std::vector<double>> vectors_;
  std::string model_id_;
  std::size_t dim_ = 0;
};

}  // namespace swtrain::retrieval
