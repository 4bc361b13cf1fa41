#include <cmath>
#include <set>

#include "check.hpp"
#include "gate_script.hpp"
#include "oracles.hpp"
#include "reference_tables.hpp"
#include "scenario.hpp"
#include "swtrain/error.hpp"
#include "swtrain/io.hpp"
#include "swtrain/mi_engine.hpp"
#include "swtrain/random.hpp"
#include "swtrain/session.hpp"

namespace acceptance {

using namespace swtrain;
using namespace swtrain::mi;
using domain::MIStage;
using domain::SkillId;

namespace {

constexpr double kScoreTolerance = 1e-12;
constexpr double kPrintedScoreTolerance = 5e-5;  // 2.8904 is rounded to 4 decimals
constexpr int kMaxCount = 40;
constexpr int kRandomTrials = 500;

const domain::DomainData& data() { return domain::DomainData::builtin(); }

SkillId id(std::string_view name) { return *data().taxonomy.find(name); }

std::string stage_label(MIStage s) { return std::string(domain::stage_name(s)); }

MiState state_with(MIStage stage, const std::vector<SkillId>& skills) {
  auto s = MiState::initial(data());
  s.stage = stage;
  s.table = data().cost_benefit.at(stage);
  record_skills(s, skills, data());
  s.stage_transcript = {{domain::Speaker::kClient, "hello", 0}, {domain::Speaker::kWorker, "hi", 0}};
  return s;
}

std::string branch_of(const ProgressionDecision& d) {
  if (const auto* b = std::get_if<BelowThreshold>(&d)) return b->threshold ? "below" : "terminal";
  if (const auto* r = std::get_if<GateRejected>(&d)) {
    if (!r->error.empty()) return "rejected: gateway error";
    return r->verdict.unparseable ? "rejected: unparseable" : "rejected: no";
  }
  const auto& a = std::get<Advanced>(d);
  return "advanced: " + stage_label(a.from) + " -> " + stage_label(a.to);
}

}  // namespace

void skill_score_suite(Check& c) {
  const auto& w = data().weights;
  for (auto stage : domain::kAllStages) {
    c.equal(skill_score({}, stage, w), 0.0, "zero counts in " + stage_label(stage));
    SkillCounts only_none;
    for (int i = 0; i < kMaxCount; ++i) only_none.add(SkillId::no_skills());
    c.equal(skill_score(only_none, stage, w), 0.0, "No-Skills only in " + stage_label(stage));
    c.equal(w.weight_for(SkillId::no_skills(), stage), 0, "No-Skills weight in " + stage_label(stage));

    for (std::size_t j = 0; j < reference::kSkills.size(); ++j) {
      const auto skill = SkillId::from_column(j);
      const auto name = std::string(reference::kSkills[j].name);
      c.expect(data().taxonomy.at(skill).name == name, "taxonomy order at " + name);
      const bool early = reference::kSkills[j].early;
      const int want = stage == MIStage::kPreparation ? (early ? 1 : 2) : (early ? 2 : 1);
      c.equal(w.weight_for(skill, stage), want, "weight of " + name + " in " + stage_label(stage));

      SkillCounts counts;
      double prev = 0.0, prev_gain = INFINITY;
      for (int n = 1; n <= kMaxCount; ++n) {
        counts.add(skill);
        const double s = skill_score(counts, stage, w);
        const double gain = s - prev;
        c.expect(gain > 0.0, "monotone: " + name + " count " + std::to_string(n));
        c.expect(gain < prev_gain, "concave: " + name + " count " + std::to_string(n));
        prev = s;
        prev_gain = gain;
      }
      // Adding No-Skills to any mix leaves the score unchanged.
      auto with_none = counts;
      with_none.add(SkillId::no_skills());
      c.equal(skill_score(with_none, stage, w), prev, "No-Skills adds nothing beside " + name);
    }
  }

  Rng rng(31);
  for (int trial = 0; trial < kRandomTrials; ++trial) {
    SkillCounts counts;
    std::vector<unsigned> raw(domain::kLabelCount);
    for (std::size_t j = 0; j < raw.size(); ++j) counts.n[j] = raw[j] = static_cast<unsigned>(rng.uniform_index(8));
    const auto stage = domain::kAllStages[rng.uniform_index(3)];
    std::vector<int> weights;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      weights.push_back(j == 0 ? 0 : (reference::kSkills[j - 1].early == (stage != MIStage::kPreparation) ? 2 : 1));
    }
    c.near(skill_score(counts, stage, w), oracle::skill_score(weights, raw), kScoreTolerance,
           "random counts " + std::to_string(trial));
  }

  SkillCounts worked;
  worked.add(id("Empathy"));
  worked.add(id("Empathy"));
  worked.add(id("Reframing"));
  const double s = skill_score(worked, MIStage::kPreContemplation, w);
  c.near(s, 2 * std::log(3.0) + std::log(2.0), kScoreTolerance, "worked value closed form");
  c.near(s, 2.8904, kPrintedScoreTolerance, "worked value as printed");
}

void progression_state_machine(Check& c) {
  std::set<std::string> branches;
  auto note = [&](const ProgressionDecision& d) { branches.insert(branch_of(d)); };

  c.equal(threshold_for(MIStage::kContemplation), reference::kContemplationThreshold, "threshold to Contemplation");
  c.equal(threshold_for(MIStage::kPreparation), reference::kPreparationThreshold, "threshold to Preparation");

  // (a) and (b): advance exactly when the score reaches the threshold and the
  // gate approves; the gate is consulted only at or above the threshold.
  Rng rng(404);
  for (int trial = 0; trial < kRandomTrials; ++trial) {
    const auto stage = rng.uniform_index(2) == 0 ? MIStage::kPreContemplation : MIStage::kContemplation;
    std::vector<SkillId> skills;
    const auto n = rng.uniform_index(4);
    for (std::uint64_t i = 0; i < n; ++i) skills.push_back(SkillId{static_cast<std::uint8_t>(rng.uniform_index(21))});
    auto s = state_with(stage, skills);
    MiConfig cfg;
    if (rng.uniform_index(2) == 0) {
      cfg.contemplation_threshold = 4.0 * rng.uniform01();
      cfg.preparation_threshold = 4.0 * rng.uniform01();
    }
    const double threshold =
        stage == MIStage::kPreContemplation ? cfg.contemplation_threshold : cfg.preparation_threshold;
    const bool approve = rng.uniform_index(2) == 0;
    auto gate = gate_script::make({approve ? "Ready.\nFINAL: YES" : "Not yet.\nFINAL: NO"});
    const auto before = s;
    const auto d = maybe_progress(s, data(), *gate.gateway, cfg);
    note(d);
    const bool reached = before.score >= threshold;
    const auto tag = "trial " + std::to_string(trial) + " ";
    c.equal(static_cast<double>(gate.calls()), reached ? 1 : 0, tag + "gate calls");
    c.expect(std::holds_alternative<Advanced>(d) == (reached && approve), tag + "advanced iff reached and approved");
    if (!std::holds_alternative<Advanced>(d)) c.expect(s == before, tag + "state untouched without advance");
  }

  // Equality with the threshold counts as reaching it.
  {
    auto s = state_with(MIStage::kPreContemplation, {id("Empathy")});
    MiConfig cfg;
    cfg.contemplation_threshold = s.score;
    auto gate = gate_script::make({"FINAL: YES"});
    c.expect(std::holds_alternative<Advanced>(maybe_progress(s, data(), *gate.gateway, cfg)), "score == threshold");
    auto t = state_with(MIStage::kPreContemplation, {id("Empathy")});
    cfg.contemplation_threshold = std::nextafter(t.score, INFINITY);
    auto idle = gate_script::make({});
    note(maybe_progress(t, data(), *idle.gateway, cfg));
    c.equal(static_cast<double>(idle.calls()), 0, "just below threshold makes no gate call");
  }

  // (c) counts, score, transcript and table reset after each advance.
  {
    auto gate = gate_script::make({"FINAL: YES", "FINAL: YES"});
    auto s = state_with(MIStage::kPreContemplation, {id("Empathy"), id("Validating")});
    s.table.costs.push_back("edited");
    const auto d = maybe_progress(s, data(), *gate.gateway);
    note(d);
    c.expect(std::holds_alternative<Advanced>(d), "first advance");
    c.expect(s.stage == MIStage::kContemplation, "stage after first advance");
    c.expect(s.counts == SkillCounts{}, "counts reset");
    c.equal(s.score, 0.0, "score reset");
    c.expect(s.stage_transcript.empty(), "stage transcript reset");
    c.expect(s.table == data().cost_benefit.at(MIStage::kContemplation), "table replaced");
    note(maybe_progress(s, data(), *gate.gateway));
    record_skills(s, std::vector<SkillId>{id("Focusing")}, data());
    const auto d2 = maybe_progress(s, data(), *gate.gateway);
    note(d2);
    c.expect(s.stage == MIStage::kPreparation, "second advance");
    c.equal(s.score, 0.0, "score reset again");
  }

  // (d) Preparation is absorbing: no gate call, no change, however high the score.
  {
    std::vector<SkillId> many;
    for (int i = 0; i < kMaxCount; ++i) many.push_back(SkillId::from_column(static_cast<std::size_t>(i % 20)));
    auto s = state_with(MIStage::kPreparation, many);
    auto gate = gate_script::make({});
    for (int i = 0; i < 5; ++i) {
      const auto before = s;
      const auto d = maybe_progress(s, data(), *gate.gateway);
      note(d);
      c.expect(s == before, "Preparation state unchanged");
    }
    c.equal(static_cast<double>(gate.calls()), 0, "no gate call in Preparation");
  }

  // Rejections: unparseable after the re-ask, and gateway failure.
  {
    auto unsure = gate_script::make({"hmm", "still hmm"});
    auto s = state_with(MIStage::kPreContemplation, {id("Empathy")});
    const auto d = maybe_progress(s, data(), *unsure.gateway);
    note(d);
    c.equal(static_cast<double>(unsure.calls()), 2, "unparseable verdict re-asked once");
    auto down = gate_script::make({"!503", "!503", "!503"});
    const auto e = maybe_progress(s, data(), *down.gateway);
    note(e);
    c.expect(s.stage == MIStage::kPreContemplation, "gateway failure keeps the stage");
  }

  const std::set<std::string> all = {"below",
                                     "terminal",
                                     "rejected: no",
                                     "rejected: unparseable",
                                     "rejected: gateway error",
                                     "advanced: PreContemplation -> Contemplation",
                                     "advanced: Contemplation -> Preparation"};
  for (const auto& b : all) c.expect(branches.count(b) == 1, "branch not exercised: " + b);
  for (const auto& b : branches) c.expect(all.count(b) == 1, "unexpected branch: " + b);

  // (e) failed turns roll back the persisted log and snapshot byte for byte.
  scenario::TempDir dir;
  session::ServiceConfig cfg;
  cfg.store_dir = dir.path();
  cfg.snapshot_every = 1;
  const nlohmann::json script = {
      {"strict", true},
      {"rules",
       {{{"system_contains", "CLIENT SIMULATION"}, {"times", 1}, {"response", scenario::client_reply("Low", "Ok.")}},
        {{"system_contains", "CLIENT SIMULATION"}, {"times", 2}, {"response", "not json"}},
        {{"system_contains", "SKILL CLASSIFIER"}, {"times", 2}, {"response", "Empathy"}},
        {{"system_contains", "SKILL CLASSIFIER"}, {"times", 3}, {"error_status", 503}, {"response", ""}},
        {{"system_contains", "SKILL CLASSIFIER"}, {"times", 1}, {"response", "Empathy"}},
        {{"system_contains", "CLIENT SIMULATION"}, {"times", 1}, {"response", scenario::client_reply("Low", "Fine.")}},
        {{"system_contains", "MI STAGE GATE"}, {"response", "FINAL: NO"}}}}};
  auto h = scenario::make_harness(script, cfg);
  const auto sid = h->service->create_session("daniel")->id;
  h->service->post_message(sid, "one");
  const auto events = io::read_file(dir.path() / sid / "events.jsonl");
  const auto snapshot = io::read_file(dir.path() / sid / "snapshot.json");
  const auto state = *h->service->get(sid);
  for (const char* text : {"malformed reply", "classifier outage"}) {
    ErrorKind kind = ErrorKind::kInvalidArgument;
    try {
      h->service->post_message(sid, text);
    } catch (const Error& e) {
      kind = e.kind();
    }
    c.expect(kind == ErrorKind::kTurnFailed, std::string(text) + " fails the turn");
    c.expect(io::read_file(dir.path() / sid / "events.jsonl") == events, std::string(text) + ": event log intact");
    c.expect(io::read_file(dir.path() / sid / "snapshot.json") == snapshot, std::string(text) + ": snapshot intact");
    c.expect(*h->service->get(sid) == state, std::string(text) + ": state intact");
  }
  c.equal(h->service->post_message(sid, "recovered").turn, 2, "next turn numbering after rollbacks");
}

}  // namespace acceptance
