#include "swtrain/domain.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

#include "swtrain/embedded_data.hpp"
#include "swtrain/error.hpp"
#include "swtrain/text.hpp"

namespace swtrain::domain {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json parse_json(std::string_view text, std::string_view what) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

SkillSet to_set(std::span<const SkillId> ids) {
  SkillSet set;
  for (auto id : ids) set.set(id.index());
  return set;
}

std::vector<SkillId> to_ids(const SkillSet& set) {
  std::vector<SkillId> ids;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.test(i)) ids.emplace_back(static_cast<std::uint8_t>(i));
  }
  return ids;
}

std::string_view stage_tag_name(StageTag tag) {
  switch (tag) {
    case StageTag::kEarly: return "Early";
    case StageTag::kLate: return "Late";
    case StageTag::kNone: return "None";
  }
  return "None";
}

StageTag parse_stage_tag(std::string_view name) {
  if (name == "Early") return StageTag::kEarly;
  if (name == "Late") return StageTag::kLate;
  if (name == "None") return StageTag::kNone;
  throw Error(ErrorKind::kParseError, "unknown stage tag: " + std::string(name));
}

std::string_view stage_name(MIStage stage) {
  switch (stage) {
    case MIStage::kPreContemplation: return "PreContemplation";
    case MIStage::kContemplation: return "Contemplation";
    case MIStage::kPreparation: return "Preparation";
  }
  return "PreContemplation";
}

MIStage parse_stage(std::string_view name) {
  auto n = text::normalize_label(name);
  if (n == "precontemplation" || n == "pre contemplation") return MIStage::kPreContemplation;
  if (n == "contemplation") return MIStage::kContemplation;
  if (n == "preparation") return MIStage::kPreparation;
  throw Error(ErrorKind::kParseError, "unknown MI stage: " + std::string(name));
}

std::optional<MIStage> next_stage(MIStage stage) {
  switch (stage) {
    case MIStage::kPreContemplation: return MIStage::kContemplation;
    case MIStage::kContemplation: return MIStage::kPreparation;
    case MIStage::kPreparation: return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Taxonomy

namespace {

SkillLabel label_from_json(const ordered_json& j, std::uint8_t id) {
  SkillLabel label;
  label.id = SkillId{id};
  label.key = j.at("id").get<std::string>();
  label.name = j.at("name").get<std::string>();
  label.stage_tag = parse_stage_tag(j.at("stage").get<std::string>());
  label.definition = j.at("definition").get<std::string>();
  label.examples = j.at("examples").get<std::vector<std::string>>();
  return label;
}

ordered_json label_to_json(const SkillLabel& label) {
  ordered_json j;
  j["id"] = label.key;
  j["name"] = label.name;
  j["stage"] = std::string(stage_tag_name(label.stage_tag));
  j["definition"] = label.definition;
  j["examples"] = label.examples;
  return j;
}

}  // namespace

Taxonomy Taxonomy::from_json_text(std::string_view json_text) {
  auto j = parse_json(json_text, "taxonomy");
  Taxonomy t;
  try {
    t.version_ = j.at("version").get<int>();
    t.labels_.push_back(label_from_json(j.at("no_skills"), 0));
    const auto& skills = j.at("skills");
    if (skills.size() != kSkillCount) {
      throw Error(ErrorKind::kParseError,
                  "taxonomy must list exactly 20 skills, found " + std::to_string(skills.size()));
    }
    for (std::size_t i = 0; i < skills.size(); ++i) {
      t.labels_.push_back(label_from_json(skills[i], static_cast<std::uint8_t>(i + 1)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("taxonomy: ") + e.what());
  }

  if (t.labels_[0].stage_tag != StageTag::kNone) {
    throw Error(ErrorKind::kParseError, "No-Skills must carry stage tag None");
  }
  int early = 0;
  int late = 0;
  for (const auto& s : t.skills()) {
    if (s.stage_tag == StageTag::kEarly) ++early;
    if (s.stage_tag == StageTag::kLate) ++late;
  }
  if (early != 10 || late != 10) {
    throw Error(ErrorKind::kParseError, "taxonomy must tag 10 skills Early and 10 Late");
  }

  for (const auto& label : t.labels_) {
    for (const auto& alias : {label.name, label.key}) {
      auto [it, inserted] = t.index_.emplace(text::normalize_label(alias), label.id);
      if (!inserted && it->second != label.id) {
        throw Error(ErrorKind::kParseError, "ambiguous label name: " + alias);
      }
    }
  }
  return t;
}

const Taxonomy& Taxonomy::builtin() { return DomainData::builtin().taxonomy; }

std::string Taxonomy::to_json_text() const {
  ordered_json j;
  j["version"] = version_;
  j["no_skills"] = label_to_json(labels_.front());
  auto skills = ordered_json::array();
  for (const auto& s : this->skills()) skills.push_back(label_to_json(s));
  j["skills"] = std::move(skills);
  return j.dump(2) + "\n";
}

std::optional<SkillId> Taxonomy::find(std::string_view raw) const {
  auto it = index_.find(text::normalize_label(raw));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const SkillLabel& Taxonomy::parse(std::string_view raw) const {
  if (auto id = find(raw)) return at(*id);
  throw Error(ErrorKind::kUnknownSkill, "unknown skill: \"" + std::string(raw) + "\"");
}

std::vector<std::string> Taxonomy::names(const SkillSet& set) const {
  std::vector<std::string> out;
  for (auto id : to_ids(set)) out.push_back(at(id).name);
  return out;
}

// ---------------------------------------------------------------------------
// Stage info, cost/benefit defaults, weights

StageInfoSet StageInfoSet::from_json_text(std::string_view json_text) {
  auto j = parse_json(json_text, "stage info");
  StageInfoSet set;
  std::array<bool, 3> seen{};
  try {
    for (const auto& entry : j.at("stages")) {
      StageInfo info;
      info.stage = parse_stage(entry.at("stage").get<std::string>());
      info.role = entry.at("role").get<std::string>();
      info.core_stance = entry.at("core_stance").get<std::string>();
      info.communication_style = entry.at("communication_style").get<std::string>();
      if (info.role.empty() || info.core_stance.empty() || info.communication_style.empty()) {
        throw Error(ErrorKind::kParseError,
                    "stage info for " + std::string(stage_name(info.stage)) + " has empty text");
      }
      auto idx = static_cast<std::size_t>(info.stage);
      seen[idx] = true;
      set.infos_[idx] = std::move(info);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("stage info: ") + e.what());
  }
  for (auto stage : kAllStages) {
    if (!seen[static_cast<std::size_t>(stage)]) {
      throw Error(ErrorKind::kParseError, "stage info missing " + std::string(stage_name(stage)));
    }
  }
  return set;
}

CostBenefitDefaults CostBenefitDefaults::from_json_text(std::string_view json_text) {
  auto j = parse_json(json_text, "cost/benefit defaults");
  CostBenefitDefaults d;
  std::array<bool, 3> seen{};
  try {
    for (const auto& entry : j.at("stages")) {
      CostBenefitTable table;
      table.stage = parse_stage(entry.at("stage").get<std::string>());
      table.costs = entry.at("costs").get<std::vector<std::string>>();
      table.benefits = entry.at("benefits").get<std::vector<std::string>>();
      for (const auto* list : {&table.costs, &table.benefits}) {
        for (std::size_t a = 0; a < list->size(); ++a) {
          for (std::size_t b = a + 1; b < list->size(); ++b) {
            if ((*list)[a] == (*list)[b]) {
              throw Error(ErrorKind::kParseError, "duplicate cost/benefit entry: " + (*list)[a]);
            }
          }
        }
      }
      auto idx = static_cast<std::size_t>(table.stage);
      seen[idx] = true;
      d.tables_[idx] = std::move(table);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("cost/benefit defaults: ") + e.what());
  }
  for (auto stage : kAllStages) {
    if (!seen[static_cast<std::size_t>(stage)]) {
      throw Error(ErrorKind::kParseError,
                  "cost/benefit defaults missing " + std::string(stage_name(stage)));
    }
  }
  return d;
}

StageWeightTable StageWeightTable::from_rule(const std::array<std::array<int, 3>, 3>& rule,
                                             const Taxonomy& taxonomy) {
  StageWeightTable table;
  table.rule_ = rule;
  for (auto stage : kAllStages) {
    auto s = static_cast<std::size_t>(stage);
    for (const auto& label : taxonomy.labels()) {
      table.weights_[s][label.id.index()] = rule[s][static_cast<std::size_t>(label.stage_tag)];
    }
  }
  return table;
}

StageWeightTable StageWeightTable::from_rule_json(std::string_view json_text,
                                                  const Taxonomy& taxonomy) {
  auto j = parse_json(json_text, "stage weights");
  std::array<std::array<int, 3>, 3> rule{};
  try {
    const auto& r = j.at("rule");
    for (auto stage : kAllStages) {
      const auto& row = r.at(std::string(stage_name(stage)));
      for (auto tag : {StageTag::kEarly, StageTag::kLate, StageTag::kNone}) {
        int w = row.at(std::string(stage_tag_name(tag))).get<int>();
        if (w < 0 || w > 2) {
          throw Error(ErrorKind::kParseError, "stage weight must be in {0,1,2}");
        }
        rule[static_cast<std::size_t>(stage)][static_cast<std::size_t>(tag)] = w;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("stage weights: ") + e.what());
  }
  return from_rule(rule, taxonomy);
}

// ---------------------------------------------------------------------------
// Utterances

std::string_view speaker_name(Speaker speaker) {
  return speaker == Speaker::kClient ? "client" : "worker";
}

Speaker parse_speaker(std::string_view name) {
  if (name == "client") return Speaker::kClient;
  if (name == "worker") return Speaker::kWorker;
  throw Error(ErrorKind::kParseError, "unknown speaker: " + std::string(name));
}

void validate_conversation(std::span<const Utterance> conversation) {
  for (std::size_t i = 0; i < conversation.size(); ++i) {
    auto expected = (i % 2 == 0) ? Speaker::kClient : Speaker::kWorker;
    if (conversation[i].speaker != expected) {
      throw Error(ErrorKind::kInvalidArgument,
                  "speakers must alternate starting with the client (utterance " +
                      std::to_string(i) + ")");
    }
    if (i > 0 && conversation[i].turn_index <= conversation[i - 1].turn_index) {
      throw Error(ErrorKind::kInvalidArgument, "turn_index must be strictly increasing");
    }
  }
}

// ---------------------------------------------------------------------------
// Data loading

std::string read_data_file(const std::filesystem::path& dir, const std::string& relative) {
  if (!dir.empty()) {
    auto path = dir / relative;
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }
  }
  const auto& files = data::embedded_files();
  auto it = files.find(relative);
  if (it == files.end()) throw Error(ErrorKind::kIo, "no data file " + relative);
  return std::string(it->second);
}

DomainData DomainData::load(const std::filesystem::path& dir) {
  auto taxonomy = Taxonomy::from_json_text(read_data_file(dir, "taxonomy.json"));
  auto weights = StageWeightTable::from_rule_json(read_data_file(dir, "stage_weights.json"), taxonomy);
  return DomainData{
      .taxonomy = std::move(taxonomy),
      .stage_info = StageInfoSet::from_json_text(read_data_file(dir, "stage_info.json")),
      .cost_benefit = CostBenefitDefaults::from_json_text(read_data_file(dir, "cost_benefit.json")),
      .weights = weights,
      .gate_template = read_data_file(dir, "templates/gate.txt"),
      .gate_reask_template = read_data_file(dir, "templates/gate_reask.txt"),
      .cost_benefit_template = read_data_file(dir, "templates/cost_benefit_edit.txt"),
      .client_template = read_data_file(dir, "templates/client_system.txt"),
      .client_repair_template = read_data_file(dir, "templates/client_repair.txt"),
  };
}

const DomainData& DomainData::builtin() {
  static const DomainData data = load({});
  return data;
}

}  // namespace swtrain::domain
