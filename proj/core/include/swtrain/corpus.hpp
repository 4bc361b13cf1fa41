#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "swtrain/domain.hpp"

namespace swtrain::corpus {

using domain::SkillId;
using domain::SkillSet;

struct AnnotatedTurn {
  std::string session_id;
  std::uint32_t turn_index = 0;
  std::string client_text;
  std::string worker_text;
  // Resolved annotator union, in file order, without duplicates. Never empty:
  // an utterance without skills carries No-Skills explicitly.
  std::vector<SkillId> ground_truth;

  std::string key() const { return session_id + "#" + std::to_string(turn_index); }
  SkillSet truth_set() const { return domain::to_set(ground_truth); }

  bool operator==(const AnnotatedTurn&) const = default;
};

struct TranscriptCorpus {
  std::vector<AnnotatedTurn> turns;
  std::string provenance;

  std::size_t size() const { return turns.size(); }
  bool empty() const { return turns.empty(); }

  // Throws Error{kDuplicateTurn} on a repeated (session_id, turn) key.
  void validate() const;

  bool operator==(const TranscriptCorpus&) const = default;
};

struct IngestResult {
  TranscriptCorpus corpus;
  std::size_t dropped_others_rows = 0;  // rows whose only label was "others"
  std::size_t stripped_others_labels = 0;  // "others" labels removed from kept rows
  std::vector<std::string> warnings;
};

// Newline-delimited JSON, one counselor turn per line:
// {"session_id": "...", "turn": 3, "client": "...", "worker": "...", "skills": ["..."]}
IngestResult ingest(const std::filesystem::path& path, const domain::Taxonomy& taxonomy);
IngestResult ingest_text(std::string_view text, const domain::Taxonomy& taxonomy,
                         std::string provenance = "inline");

// Canonical form: one compact object per line in the field order above, skills
// by display name, trailing newline.
std::string export_text(const TranscriptCorpus& corpus, const domain::Taxonomy& taxonomy);
void export_file(const TranscriptCorpus& corpus, const domain::Taxonomy& taxonomy,
                 const std::filesystem::path& path);

enum class SplitMode { kByTurn, kBySession };

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction_of_train = 0.1;
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::kByTurn;
};

struct Split {
  TranscriptCorpus first;  // train (or D'_train after a carve)
  TranscriptCorpus second;  // test (or D'_val after a carve)
};

// floor(fraction * N) turns go to `first`; the remainder goes to `second`.
// Both halves keep the corpus order. In kBySession mode whole sessions are
// assigned and the floor applies to the session count.
Split split(const TranscriptCorpus& corpus, const SplitSpec& spec);

// Reserves floor(validation_fraction_of_train * N) turns of `train` for
// validation; returns {D'_train, D'_val}.
Split carve_validation(const TranscriptCorpus& train, const SplitSpec& spec);

struct DistributionReport {
  std::size_t turns = 0;
  std::size_t total_labels = 0;
  std::array<std::size_t, domain::kLabelCount> counts{};
  std::array<double, domain::kLabelCount> proportions{};
  std::map<std::size_t, std::size_t> skills_per_turn;  // label count -> turns
  double mean_skills_per_turn = 0.0;
};

DistributionReport distribution_report(const TranscriptCorpus& corpus);

// Skill / Total / Proportion table sorted by descending count, then the
// per-turn histogram and mean.
std::string render_distribution(const DistributionReport& report, const domain::Taxonomy& taxonomy);
std::string distribution_json(const DistributionReport& report, const domain::Taxonomy& taxonomy);

}  // namespace swtrain::corpus
