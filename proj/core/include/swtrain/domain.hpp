#pragma once

#include <array>
#include <bitset>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace swtrain::domain {

inline constexpr std::size_t kSkillCount = 20;
inline constexpr std::size_t kLabelCount = kSkillCount + 1;

// Position in the taxonomy. 0 is No-Skills; 1..20 follow the taxonomy file
// order, which is also the column order of confidence-score files.
class SkillId {
 public:
  constexpr SkillId() = default;
  constexpr explicit SkillId(std::uint8_t value) : value_(value) {}

  static constexpr SkillId no_skills() { return SkillId{0}; }
  // Column j (0-based) of a confidence matrix.
  static constexpr SkillId from_column(std::size_t column) {
    return SkillId{static_cast<std::uint8_t>(column + 1)};
  }

  constexpr std::uint8_t value() const { return value_; }
  constexpr std::size_t index() const { return value_; }
  constexpr bool is_no_skills() const { return value_ == 0; }
  constexpr std::size_t column() const { return static_cast<std::size_t>(value_) - 1; }

  friend constexpr auto operator<=>(SkillId, SkillId) = default;

 private:
  std::uint8_t value_ = 0;
};

using SkillSet = std::bitset<kLabelCount>;

SkillSet to_set(std::span<const SkillId> ids);
std::vector<SkillId> to_ids(const SkillSet& set);

enum class StageTag { kEarly, kLate, kNone };

std::string_view stage_tag_name(StageTag tag);
StageTag parse_stage_tag(std::string_view name);

enum class MIStage { kPreContemplation = 0, kContemplation = 1, kPreparation = 2 };

inline constexpr std::array<MIStage, 3> kAllStages = {
    MIStage::kPreContemplation, MIStage::kContemplation, MIStage::kPreparation};

std::string_view stage_name(MIStage stage);
MIStage parse_stage(std::string_view name);
std::optional<MIStage> next_stage(MIStage stage);
inline bool is_terminal(MIStage stage) { return stage == MIStage::kPreparation; }

struct SkillLabel {
  SkillId id;
  std::string key;  // stable identifier, e.g. "open_ended_questions"
  std::string name;  // display name, e.g. "Open-Ended Questions"
  StageTag stage_tag = StageTag::kNone;
  std::string definition;
  std::vector<std::string> examples;
};

class Taxonomy {
 public:
  static Taxonomy from_json_text(std::string_view json_text);
  static const Taxonomy& builtin();

  // Serializes in the data file layout; builtin().to_json_text() reproduces
  // core/data/taxonomy.json byte for byte.
  std::string to_json_text() const;

  int version() const { return version_; }
  const SkillLabel& at(SkillId id) const { return labels_.at(id.index()); }
  const SkillLabel& no_skills() const { return labels_.front(); }

  // All 21 labels, No-Skills first.
  std::span<const SkillLabel> labels() const { return labels_; }
  // The 20 skills, excluding No-Skills.
  std::span<const SkillLabel> skills() const { return std::span(labels_).subspan(1); }

  // Case-insensitive match on display name or key with hyphen/space folding.
  std::optional<SkillId> find(std::string_view raw) const;
  // Throws Error{kUnknownSkill} when nothing matches.
  const SkillLabel& parse(std::string_view raw) const;

  std::vector<std::string> names(const SkillSet& set) const;

 private:
  int version_ = 1;
  std::vector<SkillLabel> labels_;
  std::unordered_map<std::string, SkillId> index_;
};

inline const SkillLabel& parse_skill_label(const Taxonomy& taxonomy, std::string_view raw) {
  return taxonomy.parse(raw);
}

struct StageInfo {
  MIStage stage = MIStage::kPreContemplation;
  std::string role;
  std::string core_stance;
  std::string communication_style;
};

class StageInfoSet {
 public:
  static StageInfoSet from_json_text(std::string_view json_text);
  const StageInfo& at(MIStage stage) const { return infos_.at(static_cast<std::size_t>(stage)); }

 private:
  std::array<StageInfo, 3> infos_;
};

struct CostBenefitTable {
  MIStage stage = MIStage::kPreContemplation;
  std::vector<std::string> costs;
  std::vector<std::string> benefits;

  bool operator==(const CostBenefitTable&) const = default;
};

class CostBenefitDefaults {
 public:
  static CostBenefitDefaults from_json_text(std::string_view json_text);
  const CostBenefitTable& at(MIStage stage) const {
    return tables_.at(static_cast<std::size_t>(stage));
  }

 private:
  std::array<CostBenefitTable, 3> tables_;
};

// Weights are generated from the per-stage Early/Late/None rule applied to
// each label's stage tag, never entered per skill.
class StageWeightTable {
 public:
  static StageWeightTable from_rule_json(std::string_view json_text, const Taxonomy& taxonomy);
  static StageWeightTable from_rule(const std::array<std::array<int, 3>, 3>& rule,
                                    const Taxonomy& taxonomy);

  int weight_for(SkillId skill, MIStage stage) const {
    return weights_[static_cast<std::size_t>(stage)][skill.index()];
  }
  // Rule value for a tag; indices follow StageTag.
  int rule(StageTag tag, MIStage stage) const {
    return rule_[static_cast<std::size_t>(stage)][static_cast<std::size_t>(tag)];
  }

 private:
  std::array<std::array<int, 3>, 3> rule_{};
  std::array<std::array<int, kLabelCount>, 3> weights_{};
};

enum class Speaker { kClient, kWorker };

std::string_view speaker_name(Speaker speaker);
Speaker parse_speaker(std::string_view name);

struct Utterance {
  Speaker speaker = Speaker::kClient;
  std::string text;
  std::uint32_t turn_index = 0;

  bool operator==(const Utterance&) const = default;
};

// Checks strictly increasing turn_index and Client/Worker alternation
// starting with Client. Throws Error{kInvalidArgument}.
void validate_conversation(std::span<const Utterance> conversation);

// Everything shipped under core/data, parsed.
struct DomainData {
  Taxonomy taxonomy;
  StageInfoSet stage_info;
  CostBenefitDefaults cost_benefit;
  StageWeightTable weights;
  std::string gate_template;
  std::string gate_reask_template;
  std::string cost_benefit_template;
  std::string client_template;
  std::string client_repair_template;

  static const DomainData& builtin();
  // Files present in dir override the embedded copies.
  static DomainData load(const std::filesystem::path& dir);
};

// Raw text of a data file: dir/relative if it exists, else the embedded copy.
std::string read_data_file(const std::filesystem::path& dir, const std::string& relative);

}  // namespace swtrain::domain
