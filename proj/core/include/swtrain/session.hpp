#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swtrain/classifier.hpp"
#include "swtrain/domain.hpp"
#include "swtrain/mi_engine.hpp"
#include "swtrain/simulator.hpp"

namespace swtrain::llm {
class Gateway;
}

namespace swtrain::session {

using Event = nlohmann::ordered_json;

// Mutable state of one training session. The event log is kept beside it by
// the service; replaying that log reproduces this value exactly.
struct Session {
  std::string id;
  std::string profile_id;
  std::uint32_t turns = 0;
  mi::MiState mi;
  sim::DynamicState dynamic;
  std::vector<domain::Utterance> history;  // opening client message first

  nlohmann::ordered_json to_json(const domain::Taxonomy& taxonomy) const;
  static Session from_json(const nlohmann::json& j, const domain::DomainData& data);
  // SHA-256 of the canonical JSON above.
  std::string state_hash(const domain::Taxonomy& taxonomy) const;

  bool operator==(const Session&) const = default;
};

struct TurnResult {
  std::uint32_t turn = 0;
  sim::ClientReply reply;
  classify::ClassificationResult skills;
  mi::ProgressionDecision progression;
  std::vector<std::string> warnings;
};

struct StageVisit {
  domain::MIStage stage;
  std::uint32_t from_turn;  // first turn spent in the stage (0 = session start)
};

struct FeedbackSummary {
  std::array<std::uint32_t, domain::kLabelCount> usage{};  // over the whole session
  std::vector<domain::SkillId> unused;  // skills never used, taxonomy order
  std::vector<StageVisit> trajectory;
  std::vector<std::vector<domain::SkillId>> per_turn;  // index = turn - 1

  nlohmann::ordered_json to_json(const domain::Taxonomy& taxonomy) const;
};

// Rebuilds state from an event log. Events after the last turn_committed are
// ignored; committed hashes are checked. Throws Error{kParseError}.
Session replay(std::span<const Event> events, const domain::DomainData& data,
               const mi::MiConfig& mi_config = {});
// Number of leading events that form complete turns.
std::size_t committed_prefix(std::span<const Event> events);

FeedbackSummary feedback_from_events(std::span<const Event> events, const domain::Taxonomy& taxonomy);

// <dir>/<id>/events.jsonl (append-only) and <dir>/<id>/snapshot.json. A
// default-constructed store keeps nothing on disk.
class EventStore {
 public:
  EventStore() = default;
  explicit EventStore(std::filesystem::path dir);

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  // Writes all events of one commit with a single append.
  void append(const std::string& id, std::span<const Event> events) const;
  void rewrite(const std::string& id, std::span<const Event> events) const;
  void write_snapshot(const std::string& id, const nlohmann::ordered_json& state,
                      std::size_t event_count) const;

  std::vector<std::string> list() const;
  std::vector<Event> read_events(const std::string& id) const;
  // (state, event_count) when a snapshot exists.
  std::optional<std::pair<nlohmann::json, std::size_t>> read_snapshot(const std::string& id) const;

  std::filesystem::path events_path(const std::string& id) const { return dir_ / id / "events.jsonl"; }
  std::filesystem::path snapshot_path(const std::string& id) const { return dir_ / id / "snapshot.json"; }

 private:
  std::filesystem::path dir_;
};

struct ServiceConfig {
  classify::Backend backend = classify::PromptBackend{classify::PromptVariant::kSkillDefEx};
  std::size_t history_window = 3;
  mi::MiConfig mi;
  sim::SimConfig sim;
  std::filesystem::path store_dir;  // empty: memory only
  std::uint32_t snapshot_every = 10;  // turns; 0 disables snapshots
};

using Clock = std::function<std::string()>;  // ISO-8601 timestamp
using IdGenerator = std::function<std::string()>;

Clock system_clock();
IdGenerator random_ids();
// "<prefix>0001", "<prefix>0002", ...
IdGenerator sequential_ids(std::string prefix = "s");

class SessionService {
 public:
  SessionService(const domain::DomainData& data, sim::ProfileRegistry profiles,
                 const llm::Gateway& gateway, std::shared_ptr<const classify::Classifier> classifier,
                 ServiceConfig config = {}, Clock clock = {}, IdGenerator ids = {});
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Throws Error{kUnknownProfile}.
  std::shared_ptr<const Session> create_session(const std::string& profile_id);

  // Runs one turn: classify, count and score, client reply, cost/benefit
  // edit (Contemplation and Preparation), progression. State is committed and
  // persisted only when every step succeeds. Throws Error{kSessionBusy},
  // Error{kTurnFailed}, Error{kUnknownSession}.
  TurnResult post_message(const std::string& session_id, const std::string& text);

  // Last committed state. Throws Error{kUnknownSession}.
  std::shared_ptr<const Session> get(const std::string& session_id) const;
  std::vector<Event> events(const std::string& session_id) const;
  FeedbackSummary feedback(const std::string& session_id) const;
  nlohmann::ordered_json instructor_view(const std::string& session_id) const;

  std::vector<std::string> session_ids() const;
  // Restores every session found in the store directory.
  std::size_t load_persisted();

  const sim::ProfileRegistry& profiles() const { return profiles_; }
  const domain::DomainData& data() const { return data_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Entry;
  std::shared_ptr<Entry> entry(const std::string& session_id) const;

  const domain::DomainData& data_;
  sim::ProfileRegistry profiles_;
  const llm::Gateway& gateway_;
  std::shared_ptr<const classify::Classifier> classifier_;
  ServiceConfig config_;
  Clock clock_;
  IdGenerator ids_;
  EventStore store_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

// Trainee-facing turn payload; stage and verdict fields only when `expose_stage`.
nlohmann::ordered_json turn_result_json(const TurnResult& result, const domain::Taxonomy& taxonomy,
                                        bool expose_stage);
nlohmann::ordered_json session_view_json(const Session& session, bool expose_stage);
nlohmann::ordered_json decision_json(const mi::ProgressionDecision& decision);

}  // namespace swtrain::session
