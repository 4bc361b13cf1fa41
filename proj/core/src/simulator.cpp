#include "swtrain/simulator.hpp"

#include <algorithm>
#include <array>

#include "swtrain/embedded_data.hpp"
#include "swtrain/error.hpp"
#include "swtrain/gateway.hpp"
#include "swtrain/io.hpp"
#include "swtrain/text.hpp"

namespace swtrain::sim {

namespace {

constexpr std::array<std::string_view, 4> kStateFields = {"automatic_thoughts", "emotions", "openness",
                                                          "behaviors"};

std::vector<std::string> string_list(const nlohmann::json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  return j.get<std::vector<std::string>>();
}

std::string required_text(const nlohmann::json& j, const char* field) {
  auto s = j.at(field).get<std::string>();
  if (text::trim(s).empty()) throw Error(ErrorKind::kParseError, std::string("profile field is empty: ") + field);
  return s;
}

}  // namespace

nlohmann::ordered_json DynamicState::to_json() const {
  nlohmann::ordered_json j;
  j["automatic_thoughts"] = automatic_thoughts;
  j["emotions"] = emotions;
  j["openness"] = openness;
  j["behaviors"] = behaviors;
  return j;
}

DynamicState DynamicState::from_json(const nlohmann::json& j) {
  DynamicState d;
  d.automatic_thoughts = j.at("automatic_thoughts").get<std::string>();
  d.emotions = string_list(j.at("emotions"));
  d.openness = j.at("openness").get<std::string>();
  d.behaviors = string_list(j.at("behaviors"));
  return d;
}

ClientProfile ClientProfile::from_json_text(std::string_view text) {
  ClientProfile p;
  try {
    auto j = nlohmann::json::parse(text);
    auto& s = p.profile;
    s.profile_id = required_text(j, "profile_id");
    s.name = required_text(j, "name");
    s.background = required_text(j, "background");
    s.core_beliefs = j.at("core_beliefs").get<std::vector<std::string>>();
    s.intermediate_beliefs = j.at("intermediate_beliefs").get<std::vector<std::string>>();
    s.coping_strategies = required_text(j, "coping_strategies");
    s.profile_narrative = required_text(j, "profile_narrative");
    if (s.core_beliefs.empty() || s.intermediate_beliefs.empty()) {
      throw Error(ErrorKind::kParseError, "profile beliefs must be nonempty");
    }
    p.opening_message = required_text(j, "opening_message");
    p.initial_state = DynamicState::from_json(j.at("initial_state"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("profile: ") + e.what());
  }
  return p;
}

ProfileRegistry ProfileRegistry::builtin() {
  ProfileRegistry reg;
  for (const auto& [name, content] : data::embedded_files()) {
    if (name.rfind("profiles/", 0) == 0 && name.ends_with(".json")) {
      reg.add(ClientProfile::from_json_text(content));
    }
  }
  return reg;
}

ProfileRegistry ProfileRegistry::load(const std::filesystem::path& dir) {
  auto reg = builtin();
  if (dir.empty() || !std::filesystem::is_directory(dir)) return reg;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) reg.add(ClientProfile::from_json_text(io::read_file(f)));
  return reg;
}

void ProfileRegistry::add(ClientProfile profile) {
  auto id = profile.profile.profile_id;
  profiles_.insert_or_assign(std::move(id), std::move(profile));
}

const ClientProfile& ProfileRegistry::at(const std::string& profile_id) const {
  auto it = profiles_.find(profile_id);
  if (it == profiles_.end()) throw Error(ErrorKind::kUnknownProfile, "unknown profile: " + profile_id);
  return it->second;
}

std::vector<std::string> ProfileRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : profiles_) out.push_back(id);
  return out;
}

std::string assemble_system_prompt(const StaticProfile& profile, const DynamicState& dynamic,
                                   const domain::StageInfo& stage_info,
                                   std::span<const std::string> skills_this_turn,
                                   const domain::DomainData& data) {
  std::vector<std::string> skills(skills_this_turn.begin(), skills_this_turn.end());
  return text::render_template(
      data.client_template,
      {{"name", profile.name},
       {"background", profile.background},
       {"core_beliefs", text::bullet_list(profile.core_beliefs)},
       {"intermediate_beliefs", text::bullet_list(profile.intermediate_beliefs)},
       {"coping_strategies", profile.coping_strategies},
       {"profile_narrative", profile.profile_narrative},
       {"automatic_thoughts", dynamic.automatic_thoughts},
       {"emotions", text::bullet_list(dynamic.emotions)},
       {"openness", dynamic.openness},
       {"behaviors", text::bullet_list(dynamic.behaviors)},
       {"stage", std::string(domain::stage_name(stage_info.stage))},
       {"stage_role", stage_info.role},
       {"stage_core_stance", stage_info.core_stance},
       {"stage_communication_style", stage_info.communication_style},
       {"skills", text::bullet_list(skills)}});
}

ClientReply parse_client_reply(std::string_view raw) {
  auto malformed = [](const std::string& why) { return Error(ErrorKind::kMalformedReply, why); };
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text::strip_code_fence(raw));
  } catch (const nlohmann::json::exception& e) {
    throw malformed(std::string("reply is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw malformed("reply is not a JSON object");

  std::vector<std::string> order;
  for (const auto& [key, _] : j.items()) order.push_back(key);
  auto position = [&](std::string_view key) {
    return std::find(order.begin(), order.end(), key) - order.begin();
  };
  const auto message_pos = position("message");
  if (message_pos == static_cast<std::ptrdiff_t>(order.size())) throw malformed("reply has no \"message\" field");
  for (auto field : kStateFields) {
    auto pos = position(field);
    if (pos == static_cast<std::ptrdiff_t>(order.size())) {
      throw malformed("reply has no \"" + std::string(field) + "\" field");
    }
    if (pos > message_pos) throw malformed("\"" + std::string(field) + "\" must come before \"message\"");
  }

  ClientReply reply;
  reply.raw = std::string(raw);
  try {
    reply.dynamic = DynamicState::from_json(j);
    reply.message = j.at("message").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw malformed(std::string("reply field has the wrong type: ") + e.what());
  }
  if (text::trim(reply.message).empty()) throw malformed("\"message\" is empty");
  return reply;
}

ClientReply generate_reply(const StaticProfile& profile, const DynamicState& dynamic,
                           const domain::StageInfo& stage_info,
                           std::span<const std::string> skills_this_turn,
                           std::span<const domain::Utterance> conversation,
                           const std::string& worker_message, const domain::DomainData& data,
                           const llm::Gateway& gateway, const SimConfig& config) {
  llm::ChatRequest req;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  req.structured_output = true;
  req.messages.push_back(
      {llm::Role::kSystem, assemble_system_prompt(profile, dynamic, stage_info, skills_this_turn, data)});
  for (const auto& u : conversation) {
    req.messages.push_back({u.speaker == domain::Speaker::kClient ? llm::Role::kAssistant : llm::Role::kUser, u.text});
  }
  req.messages.push_back({llm::Role::kUser, worker_message});

  std::string last_error;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    std::string raw;
    try {
      raw = gateway.chat(req).text;
    } catch (const Error& e) {
      throw Error(ErrorKind::kTurnFailed, std::string("client reply: ") + e.what());
    }
    try {
      auto reply = parse_client_reply(raw);
      reply.attempts = attempt;
      return reply;
    } catch (const Error& e) {
      last_error = e.what();
      req.messages.push_back({llm::Role::kAssistant, raw});
      req.messages.push_back(
          {llm::Role::kUser, text::render_template(data.client_repair_template, {{"error", last_error}})});
    }
  }
  throw Error(ErrorKind::kTurnFailed, "client reply malformed after repair: " + last_error);
}

}  // namespace swtrain::sim
