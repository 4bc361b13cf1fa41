#include "swtrain/retrieval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "swtrain/error.hpp"
#include "swtrain/gateway.hpp"
#include "swtrain/text.hpp"

namespace swtrain::retrieval {

using json = nlohmann::json;

std::string pair_text(std::string_view client, std::string_view worker) {
  std::string out(client);
  out += '\n';
  out += worker;
  return out;
}

DemonstrationPool DemonstrationPool::from_corpus(const corpus::TranscriptCorpus& train) {
  return DemonstrationPool{train.turns};
}

std::vector<std::string> DemonstrationPool::index_texts() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) out.push_back(index_text(i));
  return out;
}

std::vector<ScoredEntry> rank_topk(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be at least 1");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  auto n = std::min(k, order.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), better);
  std::vector<ScoredEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({order[i], scores[order[i]]});
  return out;
}

// ---------------------------------------------------------------------------
// SparseIndex

SparseIndex SparseIndex::build(std::span<const std::string> documents, Bm25Params params) {
  if (documents.empty()) throw Error(ErrorKind::kEmptyPool, "cannot index an empty pool");
  SparseIndex index;
  index.params_ = params;
  index.lengths_.reserve(documents.size());
  std::uint64_t total = 0;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    auto tokens = text::tokenize(documents[d]);
    std::map<std::string, std::uint32_t> counts;
    for (auto& t : tokens) ++counts[std::move(t)];
    for (auto& [term, tf] : counts) {
      index.postings_[term].push_back({static_cast<std::uint32_t>(d), tf});
    }
    index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total += tokens.size();
  }
  index.avgdl_ = static_cast<double>(total) / static_cast<double>(documents.size());
  return index;
}

SparseIndex SparseIndex::build(const DemonstrationPool& pool, Bm25Params params) {
  if (pool.empty()) throw Error(ErrorKind::kEmptyPool, "cannot index an empty pool");
  auto texts = pool.index_texts();
  return build(std::span<const std::string>(texts), params);
}

std::uint32_t SparseIndex::document_frequency(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
}

std::uint32_t SparseIndex::term_frequency(std::size_t ordinal, const std::string& term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) return 0;
  auto pos = std::lower_bound(it->second.begin(), it->second.end(), ordinal,
                              [](const Posting& p, std::size_t d) { return p.doc < d; });
  return (pos != it->second.end() && pos->doc == ordinal) ? pos->tf : 0;
}

double SparseIndex::idf(const std::string& term) const {
  double n = static_cast<double>(doc_count());
  double df = document_frequency(term);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> SparseIndex::score_all(std::string_view query) const {
  std::vector<double> scores(doc_count(), 0.0);
  const double k1 = params_.k1;
  const double b = params_.b;
  for (const auto& term : text::tokenize(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    double w = idf(term);
    for (const auto& p : it->second) {
      double tf = p.tf;
      double norm = avgdl_ > 0.0 ? lengths_[p.doc] / avgdl_ : 0.0;
      scores[p.doc] += w * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
    }
  }
  return scores;
}

std::vector<ScoredEntry> SparseIndex::retrieve_topk(std::string_view query, std::size_t k) const {
  if (doc_count() == 0) throw Error(ErrorKind::kEmptyPool, "index is empty");
  auto scores = score_all(query);
  return rank_topk(scores, k);
}

std::string SparseIndex::serialize() const {
  json j;
  j["format"] = "swtrain.bm25.v1";
  j["k1"] = params_.k1;
  j["b"] = params_.b;
  j["lengths"] = lengths_;
  j["avgdl"] = avgdl_;
  std::map<std::string, json> sorted;
  for (const auto& [term, list] : postings_) {
    json arr = json::array();
    for (const auto& p : list) arr.push_back({p.doc, p.tf});
    sorted.emplace(term, std::move(arr));
  }
  j["postings"] = sorted;
  return j.dump();
}

SparseIndex SparseIndex::deserialize(std::string_view snapshot) {
  SparseIndex index;
  try {
    auto j = json::parse(snapshot);
    if (j.at("format") != "swtrain.bm25.v1") {
      throw Error(ErrorKind::kParseError, "unsupported BM25 snapshot format");
    }
    index.params_.k1 = j.at("k1").get<double>();
    index.params_.b = j.at("b").get<double>();
    index.lengths_ = j.at("lengths").get<std::vector<std::uint32_t>>();
    index.avgdl_ = j.at("avgdl").get<double>();
    for (const auto& [term, arr] : j.at("postings").items()) {
      auto& list = index.postings_[term];
      for (const auto& p : arr) list.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("BM25 snapshot: ") + e.what());
  }
  if (index.lengths_.empty()) throw Error(ErrorKind::kEmptyPool, "snapshot has no documents");
  return index;
}

// ---------------------------------------------------------------------------
// EmbeddingIndex

QueryEmbedder gateway_embedder(const llm::Gateway& gateway) {
  return [&gateway](const std::string& text) { return gateway.embed({text}).front(); };
}

EmbeddingIndex EmbeddingIndex::from_vectors(std::vector<std::vector<double>> vectors,
                                            std::string model_id) {
  if (vectors.empty()) throw Error(ErrorKind::kEmptyPool, "cannot index an empty pool");
  EmbeddingIndex index;
  index.dim_ = vectors.front().size();
  if (index.dim_ == 0) throw Error(ErrorKind::kDimensionMismatch, "zero-dimensional embedding");
  for (auto& v : vectors) {
    if (v.size() != index.dim_) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "embedding of dimension " + std::to_string(v.size()) + ", expected " +
                      std::to_string(index.dim_));
    }
    index.vectors_.push_back(llm::normalize(std::move(v)));
  }
  index.model_id_ = std::move(model_id);
  return index;
}

EmbeddingIndex EmbeddingIndex::build(const DemonstrationPool& pool, const llm::Gateway& gateway) {
  if (pool.empty()) throw Error(ErrorKind::kEmptyPool, "cannot index an empty pool");
  return from_vectors(gateway.embed(pool.index_texts()), gateway.config().embedding_model);
}

std::vector<double> EmbeddingIndex::similarities(std::span<const double> query) const {
  if (query.size() != dim_) {
    throw Error(ErrorKind::kDimensionMismatch, "query of dimension " + std::to_string(query.size()) +
                                                   ", index has " + std::to_string(dim_));
  }
  double qn = 0.0;
  for (double x : query) qn += x * x;
  qn = std::sqrt(qn);
  std::vector<double> sims(vectors_.size(), 0.0);
  if (qn == 0.0) return sims;
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    double dot = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) dot += vectors_[i][d] * query[d];
    sims[i] = dot / qn;
  }
  return sims;
}

std::vector<ScoredEntry> EmbeddingIndex::topk_by_vector(std::span<const double> query,
                                                        std::size_t k) const {
  auto sims = similarities(query);
  return rank_topk(sims, k);
}

std::vector<ScoredEntry> EmbeddingIndex::dense_topk(const std::string& query, std::size_t k,
                                                    const QueryEmbedder& embed) const {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be at least 1");
  auto q = embed(query);
  return topk_by_vector(q, k);
}

std::string EmbeddingIndex::serialize() const {
  json j;
  j["format"] = "swtrain.dense.v1";
  j["model"] = model_id_;
  j["dimension"] = dim_;
  j["vectors"] = vectors_;
  return j.dump();
}

EmbeddingIndex EmbeddingIndex::deserialize(std::string_view snapshot) {
  EmbeddingIndex index;
  try {
    auto j = json::parse(snapshot);
    if (j.at("format") != "swtrain.dense.v1") {
      throw Error(ErrorKind::kParseError, "unsupported dense snapshot format");
    }
    index.model_id_ = j.at("model").get<std::string>();
    index.dim_ = j.at("dimension").get<std::size_t>();
    index.vectors_ = j.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("dense snapshot: ") + e.what());
  }
  for (const auto& v : index.vectors_) {
    if (v.size() != index.dim_) throw Error(ErrorKind::kDimensionMismatch, "snapshot vector size");
  }
  return index;
}

}  // namespace swtrain::retrieval
