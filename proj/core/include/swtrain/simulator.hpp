#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "swtrain/domain.hpp"

namespace swtrain::llm {
class Gateway;
}

namespace swtrain::sim {

struct StaticProfile {
  std::string profile_id;
  std::string name;
  std::string background;
  std::vector<std::string> core_beliefs;
  std::vector<std::string> intermediate_beliefs;
  std::string coping_strategies;
  std::string profile_narrative;

  bool operator==(const StaticProfile&) const = default;
};

struct DynamicState {
  std::string automatic_thoughts;
  std::vector<std::string> emotions;
  std::string openness;
  std::vector<std::string> behaviors;

  nlohmann::ordered_json to_json() const;
  static DynamicState from_json(const nlohmann::json& j);

  bool operator==(const DynamicState&) const = default;
};

struct ClientProfile {
  StaticProfile profile;
  std::string opening_message;
  DynamicState initial_state;

  // Throws Error{kParseError} when a field is missing or empty.
  static ClientProfile from_json_text(std::string_view text);
};

class ProfileRegistry {
 public:
  // Profiles shipped in core/data/profiles.
  static ProfileRegistry builtin();
  // Built-in profiles plus every *.json under dir (same id replaces).
  static ProfileRegistry load(const std::filesystem::path& dir);

  void add(ClientProfile profile);
  // Throws Error{kUnknownProfile}.
  const ClientProfile& at(const std::string& profile_id) const;
  bool contains(const std::string& profile_id) const { return profiles_.count(profile_id) != 0; }
  std::vector<std::string> ids() const;
  const std::map<std::string, ClientProfile>& all() const { return profiles_; }

 private:
  std::map<std::string, ClientProfile> profiles_;
};

struct SimConfig {
  double temperature = 0.7;
  int max_tokens = 1024;
};

struct ClientReply {
  DynamicState dynamic;
  std::string message;
  std::string raw;
  int attempts = 1;
};

inline constexpr std::string_view kSimulatorHeader = "CLIENT SIMULATION (template v1)";

// Static profile, current dynamic state, stage information, this turn's
// skills with the openness-update instruction, then the output contract.
std::string assemble_system_prompt(const StaticProfile& profile, const DynamicState& dynamic,
                                   const domain::StageInfo& stage_info,
                                   std::span<const std::string> skills_this_turn,
                                   const domain::DomainData& data);

// Requires the four state fields, all before "message", and a nonempty
// message. Throws Error{kMalformedReply}.
ClientReply parse_client_reply(std::string_view raw);

// Asks for a reply to `worker_message` given the conversation so far. One
// repair request quoting the parse error is made on a malformed answer; a
// second failure, or a gateway failure, throws Error{kTurnFailed}. Nothing is
// mutated: the caller commits the returned state.
ClientReply generate_reply(const StaticProfile& profile, const DynamicState& dynamic,
                           const domain::StageInfo& stage_info,
                           std::span<const std::string> skills_this_turn,
                           std::span<const domain::Utterance> conversation,
                           const std::string& worker_message, const domain::DomainData& data,
                           const llm::Gateway& gateway, const SimConfig& config = {});

}  // namespace swtrain::sim
