#include "swtrain/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "swtrain/error.hpp"
#include "swtrain/gateway.hpp"
#include "swtrain/io.hpp"
#include "swtrain/text.hpp"

namespace swtrain::session {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using domain::MIStage;
using domain::SkillId;

namespace {

ordered_json table_json(const domain::CostBenefitTable& t) {
  return ordered_json{{"stage", domain::stage_name(t.stage)}, {"costs", t.costs}, {"benefits", t.benefits}};
}

domain::CostBenefitTable table_from_json(const json& j) {
  domain::CostBenefitTable t;
  t.stage = domain::parse_stage(j.at("stage").get<std::string>());
  t.costs = j.at("costs").get<std::vector<std::string>>();
  t.benefits = j.at("benefits").get<std::vector<std::string>>();
  return t;
}

ordered_json utterances_json(const std::vector<domain::Utterance>& us) {
  auto arr = ordered_json::array();
  for (const auto& u : us) {
    arr.push_back({{"speaker", domain::speaker_name(u.speaker)}, {"text", u.text}, {"turn_index", u.turn_index}});
  }
  return arr;
}

std::vector<domain::Utterance> utterances_from_json(const json& j) {
  std::vector<domain::Utterance> out;
  for (const auto& u : j) {
    out.push_back({domain::parse_speaker(u.at("speaker").get<std::string>()), u.at("text").get<std::string>(),
                   u.at("turn_index").get<std::uint32_t>()});
  }
  return out;
}

ordered_json names_json(std::span<const SkillId> ids, const domain::Taxonomy& taxonomy) {
  auto arr = ordered_json::array();
  for (auto id : ids) arr.push_back(taxonomy.at(id).name);
  return arr;
}

std::vector<SkillId> ids_from_json(const json& j, const domain::Taxonomy& taxonomy) {
  std::vector<SkillId> out;
  for (const auto& s : j) out.push_back(taxonomy.parse(s.get<std::string>()).id);
  return out;
}

ordered_json verdict_json(const mi::GateVerdict& v) {
  return ordered_json{{"approved", v.approved},
                      {"unparseable", v.unparseable},
                      {"attempts", v.attempts},
                      {"reasoning", v.reasoning}};
}

Event make_event(std::size_t seq, const char* type, std::uint32_t turn, const Clock& clock) {
  return Event{{"seq", seq}, {"type", type}, {"turn", turn}, {"at", clock()}};
}

Error replay_error(const std::string& what, std::size_t index) {
  return Error(ErrorKind::kParseError, "event " + std::to_string(index) + ": " + what, static_cast<long>(index));
}

void append_utterance(Session& s, domain::Speaker speaker, std::string text) {
  domain::Utterance u{speaker, std::move(text), static_cast<std::uint32_t>(s.history.size())};
  s.mi.stage_transcript.push_back(u);
  s.history.push_back(std::move(u));
}

void advance(Session& s, MIStage to, domain::CostBenefitTable table) {
  s.mi.stage = to;
  s.mi.counts.reset();
  s.mi.score = 0.0;
  s.mi.stage_transcript.clear();
  s.mi.table = std::move(table);
}

// Applies one committed event. Mirrors the mutations made by post_message.
void apply_event(Session& s, const json& e, std::size_t index, const domain::DomainData& data,
                 const mi::MiConfig& mi_config) {
  const auto type = e.at("type").get<std::string>();
  if (type == "session_created") {
    s = Session{};
    s.id = e.at("session_id").get<std::string>();
    s.profile_id = e.at("profile_id").get<std::string>();
    s.mi.stage = domain::parse_stage(e.at("stage").get<std::string>());
    s.mi.table = table_from_json(e.at("table"));
    s.dynamic = sim::DynamicState::from_json(e.at("dynamic"));
    append_utterance(s, domain::Speaker::kClient, e.at("opening_message").get<std::string>());
  } else if (type == "worker_message") {
    append_utterance(s, domain::Speaker::kWorker, e.at("text").get<std::string>());
  } else if (type == "classification") {
    auto ids = ids_from_json(e.at("skills"), data.taxonomy);
    mi::record_skills(s.mi, ids, data, mi_config);
  } else if (type == "counts_updated") {
    if (e.at("score").get<double>() != s.mi.score) throw replay_error("score differs from recomputation", index);
  } else if (type == "client_reply") {
    s.dynamic = sim::DynamicState::from_json(e.at("dynamic"));
    append_utterance(s, domain::Speaker::kClient, e.at("message").get<std::string>());
  } else if (type == "cost_benefit_updated") {
    s.mi.table = table_from_json(e.at("table"));
  } else if (type == "progression") {
    if (e.at("decision") == "advanced") {
      advance(s, domain::parse_stage(e.at("to").get<std::string>()), table_from_json(e.at("table")));
    }
  } else if (type == "turn_committed") {
    s.turns = e.at("turn").get<std::uint32_t>();
    if (e.at("state_hash").get<std::string>() != s.state_hash(data.taxonomy)) {
      throw replay_error("state hash mismatch after turn " + std::to_string(s.turns), index);
    }
  } else {
    throw replay_error("unknown event type '" + type + "'", index);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Session

ordered_json Session::to_json(const domain::Taxonomy& /*taxonomy*/) const {
  ordered_json j;
  j["session_id"] = id;
  j["profile_id"] = profile_id;
  j["turns"] = turns;
  j["stage"] = domain::stage_name(mi.stage);
  j["score"] = mi.score;
  j["counts"] = mi.counts.n;
  j["table"] = table_json(mi.table);
  j["dynamic"] = dynamic.to_json();
  j["history"] = utterances_json(history);
  j["stage_transcript"] = utterances_json(mi.stage_transcript);
  return j;
}

Session Session::from_json(const json& j, const domain::DomainData& /*data*/) {
  Session s;
  try {
    s.id = j.at("session_id").get<std::string>();
    s.profile_id = j.at("profile_id").get<std::string>();
    s.turns = j.at("turns").get<std::uint32_t>();
    s.mi.stage = domain::parse_stage(j.at("stage").get<std::string>());
    s.mi.score = j.at("score").get<double>();
    auto counts = j.at("counts").get<std::vector<std::uint32_t>>();
    if (counts.size() != domain::kLabelCount) throw Error(ErrorKind::kParseError, "snapshot counts need 21 entries");
    std::copy(counts.begin(), counts.end(), s.mi.counts.n.begin());
    s.mi.table = table_from_json(j.at("table"));
    s.dynamic = sim::DynamicState::from_json(j.at("dynamic"));
    s.history = utterances_from_json(j.at("history"));
    s.mi.stage_transcript = utterances_from_json(j.at("stage_transcript"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("session state: ") + e.what());
  }
  return s;
}

std::string Session::state_hash(const domain::Taxonomy& taxonomy) const {
  return text::sha256_hex(to_json(taxonomy).dump());
}

// ---------------------------------------------------------------------------
// Replay and feedback

std::size_t committed_prefix(std::span<const Event> events) {
  std::size_t prefix = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& type = events[i].at("type");
    if (type == "turn_committed" || (i == 0 && type == "session_created")) prefix = i + 1;
  }
  return prefix;
}

Session replay(std::span<const Event> events, const domain::DomainData& data, const mi::MiConfig& mi_config) {
  if (events.empty() || events.front().value("type", "") != "session_created") {
    throw Error(ErrorKind::kParseError, "event log must start with session_created");
  }
  Session s;
  const auto n = committed_prefix(events);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      apply_event(s, events[i], i, data, mi_config);
    } catch (const json::exception& e) {
      throw replay_error(e.what(), i);
    }
  }
  return s;
}

FeedbackSummary feedback_from_events(std::span<const Event> events, const domain::Taxonomy& taxonomy) {
  FeedbackSummary f;
  const auto n = committed_prefix(events);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = events[i];
    const auto type = e.at("type").get<std::string>();
    if (type == "session_created") {
      f.trajectory.push_back({domain::parse_stage(e.at("stage").get<std::string>()), 0});
    } else if (type == "classification") {
      auto ids = ids_from_json(e.at("skills"), taxonomy);
      for (auto id : ids) ++f.usage[id.index()];
      f.per_turn.push_back(std::move(ids));
    } else if (type == "progression" && e.at("decision") == "advanced") {
      f.trajectory.push_back({domain::parse_stage(e.at("to").get<std::string>()), e.at("turn").get<std::uint32_t>() + 1});
    }
  }
  for (const auto& skill : taxonomy.skills()) {
    if (f.usage[skill.id.index()] == 0) f.unused.push_back(skill.id);
  }
  return f;
}

ordered_json FeedbackSummary::to_json(const domain::Taxonomy& taxonomy) const {
  ordered_json j;
  auto usage_json = ordered_json::object();
  for (const auto& label : taxonomy.labels()) {
    if (usage[label.id.index()] > 0) usage_json[label.name] = usage[label.id.index()];
  }
  j["usage"] = std::move(usage_json);
  j["unused"] = names_json(unused, taxonomy);
  auto traj = ordered_json::array();
  for (const auto& v : trajectory) traj.push_back({{"stage", domain::stage_name(v.stage)}, {"from_turn", v.from_turn}});
  j["trajectory"] = std::move(traj);
  auto turns = ordered_json::array();
  for (std::size_t t = 0; t < per_turn.size(); ++t) {
    turns.push_back({{"turn", t + 1}, {"skills", names_json(per_turn[t], taxonomy)}});
  }
  j["per_turn"] = std::move(turns);
  return j;
}

// ---------------------------------------------------------------------------
// EventStore

EventStore::EventStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

void EventStore::append(const std::string& id, std::span<const Event> events) const {
  if (!enabled()) return;
  std::filesystem::create_directories(dir_ / id);
  std::string buf;
  for (const auto& e : events) {
    buf += e.dump();
    buf += '\n';
  }
  std::ofstream out(events_path(id), std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, "cannot open event log for " + id);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "cannot append to event log for " + id);
}

void EventStore::rewrite(const std::string& id, std::span<const Event> events) const {
  if (!enabled()) return;
  std::filesystem::create_directories(dir_ / id);
  std::string buf;
  for (const auto& e : events) {
    buf += e.dump();
    buf += '\n';
  }
  io::write_file_atomic(events_path(id), buf);
}

void EventStore::write_snapshot(const std::string& id, const ordered_json& state, std::size_t event_count) const {
  if (!enabled()) return;
  ordered_json j{{"event_count", event_count}, {"state", state}};
  io::write_file_atomic(snapshot_path(id), j.dump(2) + "\n");
}

std::vector<std::string> EventStore::list() const {
  std::vector<std::string> ids;
  if (!enabled() || !std::filesystem::is_directory(dir_)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "events.jsonl")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<Event> EventStore::read_events(const std::string& id) const {
  std::vector<Event> out;
  auto text = io::read_file(events_path(id));
  std::size_t line_no = 0;
  for (auto line : io::split_lines(text)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(Event::parse(line));
    } catch (const json::exception&) {
      // A torn final write; everything after it is uncommitted anyway.
      break;
    }
  }
  return out;
}

std::optional<std::pair<json, std::size_t>> EventStore::read_snapshot(const std::string& id) const {
  if (!enabled() || !std::filesystem::exists(snapshot_path(id))) return std::nullopt;
  try {
    auto j = json::parse(io::read_file(snapshot_path(id)));
    return std::make_pair(j.at("state"), j.at("event_count").get<std::size_t>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, "snapshot for " + id + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Clocks and ids

Clock system_clock() {
  return [] {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
  };
}

IdGenerator random_ids() {
  auto engine = std::make_shared<std::mt19937_64>(std::random_device{}());
  auto mutex = std::make_shared<std::mutex>();
  return [engine, mutex] {
    std::lock_guard lock(*mutex);
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << (*engine)();
    return out.str();
  };
}

IdGenerator sequential_ids(std::string prefix) {
  auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
  return [counter, prefix = std::move(prefix)] {
    std::ostringstream out;
    out << prefix << std::setw(4) << std::setfill('0') << ++*counter;
    return out.str();
  };
}

// ---------------------------------------------------------------------------
// SessionService

struct SessionService::Entry {
  std::atomic<bool> busy{false};
  mutable std::mutex mutex;  // guards committed and events
  std::shared_ptr<const Session> committed;
  std::vector<Event> events;
  std::uint32_t turns_since_snapshot = 0;
};

SessionService::SessionService(const domain::DomainData& data, sim::ProfileRegistry profiles,
                               const llm::Gateway& gateway,
                               std::shared_ptr<const classify::Classifier> classifier, ServiceConfig config,
                               Clock clock, IdGenerator ids)
    : data_(data),
      profiles_(std::move(profiles)),
      gateway_(gateway),
      classifier_(std::move(classifier)),
      config_(std::move(config)),
      clock_(clock ? std::move(clock) : system_clock()),
      ids_(ids ? std::move(ids) : random_ids()),
      store_(config_.store_dir) {
  if (!classifier_) throw Error(ErrorKind::kInvalidArgument, "session service needs a classifier");
}

SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Entry> SessionService::entry(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorKind::kUnknownSession, "unknown session: " + session_id);
  return it->second;
}

std::shared_ptr<const Session> SessionService::create_session(const std::string& profile_id) {
  const auto& profile = profiles_.at(profile_id);
  auto e = std::make_shared<Entry>();

  std::unique_lock lock(sessions_mutex_);
  auto id = ids_();
  while (sessions_.count(id) != 0) id = ids_();

  Session s;
  s.id = id;
  s.profile_id = profile_id;
  s.mi = mi::MiState::initial(data_);
  s.dynamic = profile.initial_state;
  append_utterance(s, domain::Speaker::kClient, profile.opening_message);

  auto created = make_event(0, "session_created", 0, clock_);
  created["session_id"] = id;
  created["profile_id"] = profile_id;
  created["stage"] = domain::stage_name(s.mi.stage);
  created["table"] = table_json(s.mi.table);
  created["dynamic"] = s.dynamic.to_json();
  created["opening_message"] = profile.opening_message;
  store_.rewrite(id, std::span(&created, 1));

  e->events.push_back(std::move(created));
  e->committed = std::make_shared<const Session>(std::move(s));
  sessions_.emplace(id, e);
  return e->committed;
}

TurnResult SessionService::post_message(const std::string& session_id, const std::string& text) {
  auto e = entry(session_id);
  if (e->busy.exchange(true)) {
    throw Error(ErrorKind::kSessionBusy, "a turn is already in flight for session " + session_id);
  }
  struct Release {
    Entry& entry;
    ~Release() { entry.busy.store(false); }
  } release{*e};

  if (text::trim(text).empty()) throw Error(ErrorKind::kInvalidArgument, "message text is empty");

  std::shared_ptr<const Session> base;
  std::size_t seq = 0;
  {
    std::lock_guard lock(e->mutex);
    base = e->committed;
    seq = e->events.size();
  }
  Session working = *base;
  const auto& profile = profiles_.at(working.profile_id);
  const std::uint32_t turn = working.turns + 1;
  std::vector<Event> pending;
  auto event = [&](const char* type) -> Event& {
    pending.push_back(make_event(seq + pending.size(), type, turn, clock_));
    return pending.back();
  };

  TurnResult result;
  result.turn = turn;
  try {
    const auto prior = working.history;
    auto request = classify::ClassificationRequest::from_conversation(prior, text, config_.history_window);
    append_utterance(working, domain::Speaker::kWorker, text);
    event("worker_message")["text"] = text;

    result.skills = classifier_->classify(request, config_.backend);
    {
      auto& ev = event("classification");
      ev["backend"] = result.skills.backend_id;
      ev["skills"] = names_json(result.skills.skills, data_.taxonomy);
      ev["raw_output"] = result.skills.raw_output;
      ev["skipped_tokens"] = result.skills.skipped_tokens;
    }
    for (const auto& w : result.skills.warnings) result.warnings.push_back(w);

    mi::record_skills(working.mi, result.skills.skills, data_, config_.mi);
    {
      auto& ev = event("counts_updated");
      auto counts = ordered_json::object();
      for (const auto& label : data_.taxonomy.labels()) {
        if (auto n = working.mi.counts.at(label.id); n > 0) counts[label.name] = n;
      }
      ev["counts"] = std::move(counts);
      ev["score"] = working.mi.score;
    }

    std::vector<std::string> skill_names;
    for (auto id : result.skills.skills) skill_names.push_back(data_.taxonomy.at(id).name);
    result.reply = sim::generate_reply(profile.profile, working.dynamic, data_.stage_info.at(working.mi.stage),
                                       skill_names, prior, text, data_, gateway_, config_.sim);
    working.dynamic = result.reply.dynamic;
    append_utterance(working, domain::Speaker::kClient, result.reply.message);
    {
      auto& ev = event("client_reply");
      ev["dynamic"] = working.dynamic.to_json();
      ev["message"] = result.reply.message;
      ev["attempts"] = result.reply.attempts;
    }

    if (working.mi.stage != MIStage::kPreContemplation) {
      auto recent = std::span(working.history).last(2);
      auto update = mi::update_cost_benefit(working.mi.table, recent, data_, gateway_, config_.mi);
      working.mi.table = update.table;
      auto& ev = event("cost_benefit_updated");
      ev["table"] = table_json(working.mi.table);
      auto ops = ordered_json::array();
      for (const auto& op : update.applied) {
        ordered_json o;
        o["op"] = op.kind == mi::CostBenefitOp::Kind::kAdd ? "add"
                  : op.kind == mi::CostBenefitOp::Kind::kRemove ? "remove" : "edit";
        o["list"] = op.list == mi::CostBenefitOp::List::kCost ? "cost" : "benefit";
        if (op.kind == mi::CostBenefitOp::Kind::kEdit) {
          o["from"] = op.from;
          o["to"] = op.to;
        } else {
          o["text"] = op.text;
        }
        ops.push_back(std::move(o));
      }
      ev["ops"] = std::move(ops);
      ev["warnings"] = update.warnings;
      for (const auto& w : update.warnings) result.warnings.push_back(w);
    }

    result.progression = mi::maybe_progress(working.mi, data_, gateway_, config_.mi);
    {
      auto& ev = event("progression");
      const auto decision = decision_json(result.progression);
      for (const auto& [k, v] : decision.items()) ev[k] = v;
      if (std::holds_alternative<mi::Advanced>(result.progression)) ev["table"] = table_json(working.mi.table);
    }

    working.turns = turn;
    event("turn_committed")["state_hash"] = working.state_hash(data_.taxonomy);
    store_.append(session_id, pending);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::kTurnFailed) throw;
    throw Error(ErrorKind::kTurnFailed, std::string(error_kind_name(err.kind())) + ": " + err.what());
  }

  auto committed = std::make_shared<const Session>(std::move(working));
  bool snapshot = false;
  std::size_t event_count = 0;
  {
    std::lock_guard lock(e->mutex);
    e->events.insert(e->events.end(), pending.begin(), pending.end());
    e->committed = committed;
    event_count = e->events.size();
    if (config_.snapshot_every > 0 && ++e->turns_since_snapshot >= config_.snapshot_every) {
      e->turns_since_snapshot = 0;
      snapshot = true;
    }
  }
  if (snapshot) store_.write_snapshot(session_id, committed->to_json(data_.taxonomy), event_count);
  return result;
}

std::shared_ptr<const Session> SessionService::get(const std::string& session_id) const {
  auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  return e->committed;
}

std::vector<Event> SessionService::events(const std::string& session_id) const {
  auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  return e->events;
}

FeedbackSummary SessionService::feedback(const std::string& session_id) const {
  auto log = events(session_id);
  return feedback_from_events(log, data_.taxonomy);
}

ordered_json SessionService::instructor_view(const std::string& session_id) const {
  auto e = entry(session_id);
  std::shared_ptr<const Session> s;
  std::vector<Event> log;
  {
    std::lock_guard lock(e->mutex);
    s = e->committed;
    log = e->events;
  }
  ordered_json j;
  j["session_id"] = s->id;
  j["profile_id"] = s->profile_id;
  j["turns"] = s->turns;
  j["stage"] = domain::stage_name(s->mi.stage);
  j["score"] = s->mi.score;
  auto counts = ordered_json::object();
  for (const auto& label : data_.taxonomy.labels()) {
    if (auto n = s->mi.counts.at(label.id); n > 0) counts[label.name] = n;
  }
  j["counts"] = std::move(counts);
  j["table"] = table_json(s->mi.table);
  j["dynamic"] = s->dynamic.to_json();

  auto verdicts = ordered_json::array();
  auto trace = ordered_json::array();
  std::string stage = std::string(domain::stage_name(domain::MIStage::kPreContemplation));
  for (const auto& ev : log) {
    const auto type = ev.at("type").get<std::string>();
    if (type == "session_created") stage = ev.at("stage").get<std::string>();
    if (type == "counts_updated") {
      trace.push_back({{"turn", ev.at("turn")}, {"stage", stage}, {"score", ev.at("score")}});
    }
    if (type == "progression") {
      if (ev.contains("verdict")) {
        ordered_json v{{"turn", ev.at("turn")}, {"decision", ev.at("decision")}};
        for (auto& [k, val] : ev.at("verdict").items()) v[k] = val;
        verdicts.push_back(std::move(v));
      }
      if (ev.at("decision") == "advanced") stage = ev.at("to").get<std::string>();
    }
  }
  j["verdicts"] = std::move(verdicts);
  j["score_trace"] = std::move(trace);
  j["trajectory"] = feedback_from_events(log, data_.taxonomy).to_json(data_.taxonomy).at("trajectory");
  return j;
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

std::size_t SessionService::load_persisted() {
  std::size_t loaded = 0;
  for (const auto& id : store_.list()) {
    auto log = store_.read_events(id);
    if (log.empty()) continue;
    const auto prefix = committed_prefix(log);
    if (prefix < log.size()) {
      log.resize(prefix);
      store_.rewrite(id, log);
    }

    Session s;
    std::size_t start = 0;
    if (auto snap = store_.read_snapshot(id); snap && snap->second <= prefix) {
      s = Session::from_json(snap->first, data_);
      start = snap->second;
    }
    for (std::size_t i = start; i < prefix; ++i) {
      try {
        apply_event(s, log[i], i, data_, config_.mi);
      } catch (const json::exception& ex) {
        throw replay_error(ex.what(), i);
      }
    }

    auto e = std::make_shared<Entry>();
    e->events = std::move(log);
    e->committed = std::make_shared<const Session>(std::move(s));
    std::unique_lock lock(sessions_mutex_);
    sessions_.insert_or_assign(id, std::move(e));
    ++loaded;
  }
  return loaded;
}

// ---------------------------------------------------------------------------
// Views

ordered_json decision_json(const mi::ProgressionDecision& decision) {
  ordered_json j;
  j["decision"] = mi::decision_name(decision);
  if (const auto* b = std::get_if<mi::BelowThreshold>(&decision)) {
    j["score"] = b->score;
    j["threshold"] = b->threshold ? ordered_json(*b->threshold) : ordered_json(nullptr);
  } else if (const auto* r = std::get_if<mi::GateRejected>(&decision)) {
    j["verdict"] = verdict_json(r->verdict);
    if (!r->error.empty()) j["error"] = r->error;
  } else {
    const auto& a = std::get<mi::Advanced>(decision);
    j["from"] = domain::stage_name(a.from);
    j["to"] = domain::stage_name(a.to);
    j["verdict"] = verdict_json(a.verdict);
  }
  return j;
}

ordered_json turn_result_json(const TurnResult& result, const domain::Taxonomy& taxonomy, bool expose_stage) {
  ordered_json j;
  j["turn"] = result.turn;
  j["reply"] = {{"message", result.reply.message}};
  j["skills"] = names_json(result.skills.skills, taxonomy);
  if (expose_stage) j["progression"] = decision_json(result.progression);
  return j;
}

ordered_json session_view_json(const Session& session, bool expose_stage) {
  ordered_json j;
  j["session_id"] = session.id;
  j["profile_id"] = session.profile_id;
  j["turns"] = session.turns;
  auto history = ordered_json::array();
  for (const auto& u : session.history) {
    history.push_back({{"speaker", domain::speaker_name(u.speaker)}, {"text", u.text}});
  }
  j["history"] = std::move(history);
  if (expose_stage) {
    j["stage"] = domain::stage_name(session.mi.stage);
    j["score"] = session.mi.score;
  }
  return j;
}

}  // namespace swtrain::session
