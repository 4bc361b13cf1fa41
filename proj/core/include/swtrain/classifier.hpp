#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swtrain/corpus.hpp"
#include "swtrain/domain.hpp"
#include "swtrain/retrieval.hpp"
#include "swtrain/thresholds.hpp"

namespace swtrain::llm {
class Gateway;
}

namespace swtrain::classify {

using domain::SkillId;

struct ClassificationRequest {
  // Up to (c_{i-1}, s_{i-1}, c_i), oldest first.
  std::vector<domain::Utterance> history;
  std::string target;  // s_i
  std::string sample_key;  // needed by the Scores backend only

  // Keeps the last `window` utterances of a longer conversation.
  static ClassificationRequest from_conversation(std::span<const domain::Utterance> before,
                                                 std::string target, std::size_t window = 3);
  // History (c_{i-1}, s_{i-1}, c_i) for corpus turn i, drawing the previous
  // turn from the same session when it directly precedes.
  static ClassificationRequest from_corpus(const corpus::TranscriptCorpus& corpus, std::size_t index);

  // Client utterance the target answers, or "".
  std::string_view last_client_text() const;
};

struct ClassificationResult {
  std::vector<SkillId> skills;  // most likely first; never empty, no duplicates
  std::string backend_id;
  std::string raw_output;
  std::chrono::nanoseconds latency{0};
  std::size_t skipped_tokens = 0;
  // Scores backend, nothing above threshold: best-scoring label.
  std::optional<SkillId> top_below_threshold;
  std::vector<std::string> warnings;
};

enum class PromptVariant { kSkillOnly, kSkillDefEx };
enum class RetrieverKind { kSparse, kDense };

struct PromptBackend {
  PromptVariant variant = PromptVariant::kSkillOnly;
};

struct InContextBackend {
  RetrieverKind retriever = RetrieverKind::kSparse;
  std::size_t k = 8;
};

struct ScoresBackend {
  std::vector<double> thresholds;
};

using Backend = std::variant<PromptBackend, InContextBackend, ScoresBackend>;

std::string backend_id(const Backend& backend);
// "baseline", "baseline-defex", "icl-bm25", "icl-dense", "scores".
Backend parse_backend(std::string_view name, std::size_t k = 8);

// System and user parts of a classifier prompt. Every system prompt starts with
// kPromptHeader.
struct Prompt {
  std::string system;
  std::string user;

  std::string text() const { return system + "\n\n" + user; }
};

inline constexpr std::string_view kPromptHeader = "SKILL CLASSIFIER (template v1)";

Prompt build_baseline_prompt(const ClassificationRequest& request, PromptVariant variant,
                             const domain::Taxonomy& taxonomy);
Prompt build_icl_prompt(const ClassificationRequest& request,
                        std::span<const corpus::AnnotatedTurn> demonstrations,
                        const domain::Taxonomy& taxonomy);

struct ParsedSkills {
  std::vector<SkillId> skills;
  std::size_t skipped = 0;
};

// Lenient: label mentions in order of first appearance, duplicates dropped,
// unrecognized fragments counted in `skipped`. No-Skills is dropped when real
// skills are present; an empty result becomes [No-Skills].
ParsedSkills parse_skill_output(std::string_view raw, const domain::Taxonomy& taxonomy);

// Labels with p >= t, by descending p (ties by column); [No-Skills] when none.
ClassificationResult classify_scores(std::span<const double> row, std::span<const double> thresholds);

class Classifier {
 public:
  Classifier(const domain::Taxonomy& taxonomy, const llm::Gateway* gateway);

  // The pool must be the training split. Builds the sparse index eagerly and
  // the dense one on first use.
  void set_pool(std::shared_ptr<const retrieval::DemonstrationPool> pool,
                retrieval::Bm25Params bm25 = {});
  void set_dense_index(std::shared_ptr<const retrieval::EmbeddingIndex> index);
  void set_scores(std::shared_ptr<const thresholds::ConfidenceMatrix> scores);

  // Throws GatewayError, Error{kScoreSourceMissing}, Error{kEmptyPool}.
  ClassificationResult classify(const ClassificationRequest& request, const Backend& backend) const;

  // Demonstrations an InContext backend would use, in rank order.
  std::vector<corpus::AnnotatedTurn> demonstrations(const ClassificationRequest& request,
                                                    const InContextBackend& backend) const;

 private:
  ClassificationResult run_prompt(const Prompt& prompt, std::string id) const;

  const domain::Taxonomy& taxonomy_;
  const llm::Gateway* gateway_;
  std::shared_ptr<const retrieval::DemonstrationPool> pool_;
  std::shared_ptr<const retrieval::SparseIndex> sparse_;
  mutable std::shared_ptr<const retrieval::EmbeddingIndex> dense_;
  std::unique_ptr<std::mutex> dense_mutex_ = std::make_unique<std::mutex>();
  std::shared_ptr<const thresholds::ConfidenceMatrix> scores_;
};

}  // namespace swtrain::classify
