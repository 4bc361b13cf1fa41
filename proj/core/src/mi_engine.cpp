#include "swtrain/mi_engine.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "swtrain/error.hpp"
#include "swtrain/gateway.hpp"
#include "swtrain/text.hpp"

namespace swtrain::mi {

std::uint64_t SkillCounts::total() const {
  std::uint64_t sum = 0;
  for (auto v : n) sum += v;
  return sum;
}

double skill_score(const SkillCounts& counts, MIStage stage, const domain::StageWeightTable& weights,
                   double log_base) {
  const double scale = log_base > 0.0 ? 1.0 / std::log(log_base) : 1.0;
  double score = 0.0;
  for (std::size_t j = 0; j < domain::kLabelCount; ++j) {
    int w = weights.weight_for(SkillId{static_cast<std::uint8_t>(j)}, stage);
    if (w == 0 || counts.n[j] == 0) continue;
    score += w * std::log1p(static_cast<double>(counts.n[j])) * scale;
  }
  return score;
}

double threshold_for(MIStage target, const MiConfig& config) {
  switch (target) {
    case MIStage::kContemplation: return config.contemplation_threshold;
    case MIStage::kPreparation: return config.preparation_threshold;
    case MIStage::kPreContemplation: break;
  }
  throw Error(ErrorKind::kInvalidArgument, "PreContemplation is never a progression target");
}

double threshold_to_leave(MIStage current, const MiConfig& config) {
  auto next = domain::next_stage(current);
  if (!next) {
    throw Error(ErrorKind::kNoNextStage, std::string(domain::stage_name(current)) + " is terminal");
  }
  return threshold_for(*next, config);
}

std::optional<bool> parse_verdict(std::string_view output) {
  auto lower = text::to_lower(output);
  auto marker = text::to_lower(kVerdictMarker);
  auto pos = lower.rfind(marker);
  if (pos == std::string::npos) return std::nullopt;
  pos += marker.size();
  while (pos < lower.size() && (lower[pos] == ' ' || lower[pos] == '*' || lower[pos] == '\t')) ++pos;
  auto word_end = pos;
  while (word_end < lower.size() && std::isalpha(static_cast<unsigned char>(lower[word_end]))) ++word_end;
  auto word = std::string_view(lower).substr(pos, word_end - pos);
  if (word == "yes") return true;
  if (word == "no") return false;
  return std::nullopt;
}

std::string render_transcript(std::span<const domain::Utterance> transcript) {
  if (transcript.empty()) return "(no messages yet)";
  std::string out;
  for (const auto& u : transcript) {
    out += u.speaker == domain::Speaker::kClient ? "Client: " : "Social Worker: ";
    out += u.text;
    out += '\n';
  }
  out.pop_back();
  return out;
}

std::string build_gate_prompt(MIStage stage, std::span<const domain::Utterance> stage_transcript,
                              const domain::CostBenefitTable& table, const domain::DomainData& data) {
  auto next = domain::next_stage(stage);
  if (!next) throw Error(ErrorKind::kNoNextStage, "no stage follows Preparation");
  const auto& info = data.stage_info.at(stage);
  return text::render_template(data.gate_template,
                               {{"stage", std::string(domain::stage_name(stage))},
                                {"next_stage", std::string(domain::stage_name(*next))},
                                {"stage_role", info.role},
                                {"stage_core_stance", info.core_stance},
                                {"stage_communication_style", info.communication_style},
                                {"costs", text::bullet_list(table.costs)},
                                {"benefits", text::bullet_list(table.benefits)},
                                {"transcript", render_transcript(stage_transcript)}});
}

GateVerdict gate_evaluate(MIStage stage, std::span<const domain::Utterance> stage_transcript,
                          const domain::CostBenefitTable& table, const domain::DomainData& data,
                          const llm::Gateway& gateway, const MiConfig& config) {
  llm::ChatRequest req;
  req.temperature = config.gate_temperature;
  req.messages = {{llm::Role::kSystem, build_gate_prompt(stage, stage_transcript, table, data)},
                  {llm::Role::kUser, "Evaluate the client now."}};

  GateVerdict verdict;
  verdict.reasoning = gateway.chat(req).text;
  verdict.attempts = 1;
  auto decision = parse_verdict(verdict.reasoning);
  if (!decision) {
    req.messages.push_back({llm::Role::kAssistant, verdict.reasoning});
    req.messages.push_back({llm::Role::kUser, data.gate_reask_template});
    verdict.reasoning = gateway.chat(req).text;
    verdict.attempts = 2;
    decision = parse_verdict(verdict.reasoning);
  }
  verdict.unparseable = !decision.has_value();
  verdict.approved = decision.value_or(false);
  return verdict;
}

std::string_view decision_name(const ProgressionDecision& decision) {
  switch (decision.index()) {
    case 0: return "below_threshold";
    case 1: return "gate_rejected";
    default: return "advanced";
  }
}

MiState MiState::initial(const domain::DomainData& data) {
  MiState s;
  s.table = data.cost_benefit.at(MIStage::kPreContemplation);
  return s;
}

void record_skills(MiState& state, std::span<const SkillId> skills, const domain::DomainData& data,
                   const MiConfig& config) {
  state.counts.add(skills);
  state.score = skill_score(state.counts, state.stage, data.weights, config.log_base);
}

ProgressionDecision maybe_progress(MiState& state, const domain::DomainData& data,
                                   const llm::Gateway& gateway, const MiConfig& config) {
  auto next = domain::next_stage(state.stage);
  if (!next) return BelowThreshold{state.score, std::nullopt};
  double threshold = threshold_for(*next, config);
  if (state.score < threshold) return BelowThreshold{state.score, threshold};

  GateVerdict verdict;
  try {
    verdict = gate_evaluate(state.stage, state.stage_transcript, state.table, data, gateway, config);
  } catch (const Error& e) {
    GateRejected rejected;
    rejected.error = e.what();
    if (const auto* ge = dynamic_cast<const llm::GatewayError*>(&e)) rejected.verdict.attempts = ge->attempts();
    return rejected;
  }
  if (!verdict.approved) return GateRejected{std::move(verdict), {}};

  Advanced adv{state.stage, *next, std::move(verdict)};
  state.stage = *next;
  state.counts.reset();
  state.score = 0.0;
  state.stage_transcript.clear();
  state.table = data.cost_benefit.at(*next);
  return adv;
}

std::vector<CostBenefitOp> parse_cost_benefit_diff(std::string_view raw) {
  auto malformed = [](const std::string& why) {
    return Error(ErrorKind::kMalformedReply, "cost/benefit diff: " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::strip_code_fence(raw));
  } catch (const nlohmann::json::parse_error& e) {
    // The library's own wording changes between releases and would leak into event logs.
    throw malformed("not valid JSON at byte " + std::to_string(e.byte));
  }
  if (!j.is_object() || !j.contains("ops") || !j.at("ops").is_array()) {
    throw malformed("expected an object with an \"ops\" array");
  }
  auto get_string = [&](const nlohmann::json& op, const char* field) {
    if (!op.contains(field) || !op.at(field).is_string()) {
      throw malformed(std::string("op is missing string field \"") + field + "\"");
    }
    auto s = text::trim(op.at(field).get<std::string>());
    if (s.empty()) throw malformed(std::string("empty \"") + field + "\"");
    return s;
  };

  std::vector<CostBenefitOp> ops;
  for (const auto& o : j.at("ops")) {
    if (!o.is_object()) throw malformed("op is not an object");
    CostBenefitOp op;
    auto kind = text::to_lower(get_string(o, "op"));
    auto list = text::to_lower(get_string(o, "list"));
    if (list == "cost" || list == "costs") {
      op.list = CostBenefitOp::List::kCost;
    } else if (list == "benefit" || list == "benefits") {
      op.list = CostBenefitOp::List::kBenefit;
    } else {
      throw malformed("unknown list \"" + list + "\"");
    }
    if (kind == "add" || kind == "remove") {
      op.kind = kind == "add" ? CostBenefitOp::Kind::kAdd : CostBenefitOp::Kind::kRemove;
      op.text = get_string(o, "text");
    } else if (kind == "edit") {
      op.kind = CostBenefitOp::Kind::kEdit;
      op.from = get_string(o, "from");
      op.to = get_string(o, "to");
    } else {
      throw malformed("unknown op \"" + kind + "\"");
    }
    ops.push_back(std::move(op));
  }
  return ops;
}

TableUpdate apply_cost_benefit_diff(const domain::CostBenefitTable& table,
                                    std::span<const CostBenefitOp> ops) {
  TableUpdate out{table, {}, {}};
  for (const auto& op : ops) {
    auto& list = op.list == CostBenefitOp::List::kCost ? out.table.costs : out.table.benefits;
    const char* list_name = op.list == CostBenefitOp::List::kCost ? "cost" : "benefit";
    auto find = [&](const std::string& s) { return std::find(list.begin(), list.end(), s); };
    switch (op.kind) {
      case CostBenefitOp::Kind::kAdd:
        if (find(op.text) != list.end()) {
          out.warnings.push_back(std::string("add skipped, ") + list_name + " already present: " + op.text);
          continue;
        }
        list.push_back(op.text);
        break;
      case CostBenefitOp::Kind::kRemove: {
        auto it = find(op.text);
        if (it == list.end()) {
          out.warnings.push_back(std::string("remove skipped, no such ") + list_name + ": " + op.text);
          continue;
        }
        list.erase(it);
        break;
      }
      case CostBenefitOp::Kind::kEdit: {
        auto it = find(op.from);
        if (it == list.end()) {
          out.warnings.push_back(std::string("edit skipped, no such ") + list_name + ": " + op.from);
          continue;
        }
        if (op.from != op.to && find(op.to) != list.end()) {
          out.warnings.push_back(std::string("edit skipped, ") + list_name + " already present: " + op.to);
          continue;
        }
        *it = op.to;
        break;
      }
    }
    out.applied.push_back(op);
  }
  return out;
}

std::string build_cost_benefit_prompt(const domain::CostBenefitTable& table,
                                      std::span<const domain::Utterance> recent_turns,
                                      const domain::DomainData& data) {
  return text::render_template(data.cost_benefit_template,
                               {{"stage", std::string(domain::stage_name(table.stage))},
                                {"costs", text::bullet_list(table.costs)},
                                {"benefits", text::bullet_list(table.benefits)},
                                {"recent_turns", render_transcript(recent_turns)}});
}

TableUpdate update_cost_benefit(const domain::CostBenefitTable& table,
                                std::span<const domain::Utterance> recent_turns,
                                const domain::DomainData& data, const llm::Gateway& gateway,
                                const MiConfig& config) {
  llm::ChatRequest req;
  req.temperature = config.editor_temperature;
  req.structured_output = true;
  req.messages = {{llm::Role::kSystem, build_cost_benefit_prompt(table, recent_turns, data)},
                  {llm::Role::kUser, "Return the JSON object now."}};
  try {
    auto ops = parse_cost_benefit_diff(gateway.chat(req).text);
    return apply_cost_benefit_diff(table, ops);
  } catch (const Error& e) {
    return TableUpdate{table, {}, {std::string("table unchanged: ") + e.what()}};
  }
}

}  // namespace swtrain::mi
