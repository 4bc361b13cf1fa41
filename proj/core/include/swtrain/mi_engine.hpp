#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swtrain/domain.hpp"

namespace swtrain::llm {
class Gateway;
}

namespace swtrain::mi {

using domain::MIStage;
using domain::SkillId;

// Occurrences n_j of each label within the current stage.
struct SkillCounts {
  std::array<std::uint32_t, domain::kLabelCount> n{};

  void add(SkillId id) { ++n[id.index()]; }
  void add(std::span<const SkillId> ids) {
    for (auto id : ids) add(id);
  }
  std::uint32_t at(SkillId id) const { return n[id.index()]; }
  std::uint64_t total() const;
  void reset() { n.fill(0); }

  bool operator==(const SkillCounts&) const = default;
};

struct MiConfig {
  // Base of the damping logarithm; 0 selects the natural log.
  double log_base = 0.0;
  double contemplation_threshold = 0.4;
  double preparation_threshold = 0.6;
  double gate_temperature = 0.0;
  double editor_temperature = 0.0;
};

// Sum over all 21 labels of w_j * log(1 + n_j).
double skill_score(const SkillCounts& counts, MIStage stage, const domain::StageWeightTable& weights,
                   double log_base = 0.0);

// Threshold to enter `target`. Throws Error{kInvalidArgument} for PreContemplation.
double threshold_for(MIStage target, const MiConfig& config = {});
// Threshold to leave `current`. Throws Error{kNoNextStage} for Preparation.
double threshold_to_leave(MIStage current, const MiConfig& config = {});

struct GateVerdict {
  std::string reasoning;  // full model output of the last attempt
  bool approved = false;
  bool unparseable = false;  // no decision line after the re-ask
  int attempts = 0;  // model calls made, re-ask included

  bool operator==(const GateVerdict&) const = default;
};

inline constexpr std::string_view kVerdictMarker = "FINAL:";

// Decision from the last "FINAL: YES|NO" line (case-insensitive), if any.
std::optional<bool> parse_verdict(std::string_view output);

std::string render_transcript(std::span<const domain::Utterance> transcript);

std::string build_gate_prompt(MIStage stage, std::span<const domain::Utterance> stage_transcript,
                              const domain::CostBenefitTable& table, const domain::DomainData& data);

// Asks the gate model once, re-asks once on an unparseable answer. Throws
// Error{kNoNextStage} for Preparation and GatewayError from the gateway.
GateVerdict gate_evaluate(MIStage stage, std::span<const domain::Utterance> stage_transcript,
                          const domain::CostBenefitTable& table, const domain::DomainData& data,
                          const llm::Gateway& gateway, const MiConfig& config = {});

struct BelowThreshold {
  double score = 0.0;
  std::optional<double> threshold;  // nullopt at the terminal stage

  bool operator==(const BelowThreshold&) const = default;
};

struct GateRejected {
  GateVerdict verdict;
  std::string error;  // gateway failure message, when the gate could not be reached

  bool operator==(const GateRejected&) const = default;
};

struct Advanced {
  MIStage from = MIStage::kPreContemplation;
  MIStage to = MIStage::kContemplation;
  GateVerdict verdict;

  bool operator==(const Advanced&) const = default;
};

using ProgressionDecision = std::variant<BelowThreshold, GateRejected, Advanced>;

std::string_view decision_name(const ProgressionDecision& decision);

// Controller state of one session.
struct MiState {
  MIStage stage = MIStage::kPreContemplation;
  SkillCounts counts;
  double score = 0.0;
  domain::CostBenefitTable table;
  std::vector<domain::Utterance> stage_transcript;  // every message sent in the current stage

  static MiState initial(const domain::DomainData& data);

  bool operator==(const MiState&) const = default;
};

// Adds this turn's labels and recomputes the score.
void record_skills(MiState& state, std::span<const SkillId> skills, const domain::DomainData& data,
                   const MiConfig& config = {});

// Below threshold: no gateway call. Otherwise the gate decides; on approval
// the stage advances, counts and score reset, the transcript restarts and the
// table is re-seeded from the new stage's defaults. Gateway failures become
// GateRejected. The terminal stage always yields BelowThreshold.
ProgressionDecision maybe_progress(MiState& state, const domain::DomainData& data,
                                   const llm::Gateway& gateway, const MiConfig& config = {});

struct CostBenefitOp {
  enum class Kind { kAdd, kRemove, kEdit };
  enum class List { kCost, kBenefit };

  Kind kind = Kind::kAdd;
  List list = List::kCost;
  std::string text;  // add / remove
  std::string from;  // edit
  std::string to;  // edit

  bool operator==(const CostBenefitOp&) const = default;
};

// {"ops": [...]} as requested by the editor template, optionally fenced.
// Throws Error{kMalformedReply}.
std::vector<CostBenefitOp> parse_cost_benefit_diff(std::string_view raw);

struct TableUpdate {
  domain::CostBenefitTable table;
  std::vector<CostBenefitOp> applied;
  std::vector<std::string> warnings;
};

// Ops that would break uniqueness or name a missing entry are skipped with a warning.
TableUpdate apply_cost_benefit_diff(const domain::CostBenefitTable& table,
                                    std::span<const CostBenefitOp> ops);

std::string build_cost_benefit_prompt(const domain::CostBenefitTable& table,
                                      std::span<const domain::Utterance> recent_turns,
                                      const domain::DomainData& data);

// Never throws for model trouble: a gateway failure or malformed diff leaves
// the table unchanged and is reported in `warnings`.
TableUpdate update_cost_benefit(const domain::CostBenefitTable& table,
                                std::span<const domain::Utterance> recent_turns,
                                const domain::DomainData& data, const llm::Gateway& gateway,
                                const MiConfig& config = {});

}  // namespace swtrain::mi
