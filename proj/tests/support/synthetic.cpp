#include "synthetic.hpp"

#include <algorithm>

#include "reference_tables.hpp"
#include "swtrain/random.hpp"

namespace synthetic {

using namespace swtrain;

namespace {

const char* kWords[] = {"money",   "job",  "rent",   "honest", "family",  "feel",    "angry", "tired",
                        "benefits", "plan", "change", "friend", "worried", "support", "week",  "talk"};

std::string sentence(Rng& rng, std::size_t max_words) {
  std::string s;
  auto n = 1 + rng.uniform_index(max_words);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += kWords[rng.uniform_index(std::size(kWords))];
  }
  return s;
}

}  // namespace

corpus::TranscriptCorpus random_corpus(std::uint64_t seed, std::size_t sessions, std::size_t max_turns) {
  Rng rng(seed);
  corpus::TranscriptCorpus c;
  c.provenance = "synthetic";
  for (std::size_t s = 0; s < sessions; ++s) {
    auto turns = 1 + rng.uniform_index(max_turns);
    for (std::size_t t = 0; t < turns; ++t) {
      corpus::AnnotatedTurn turn;
      turn.session_id = "S" + std::to_string(s);
      turn.turn_index = static_cast<std::uint32_t>(t);
      turn.client_text = sentence(rng, 8);
      turn.worker_text = sentence(rng, 8);
      auto k = 1 + rng.uniform_index(3);
      while (turn.ground_truth.size() < k) {
        domain::SkillId id{static_cast<std::uint8_t>(rng.uniform_index(domain::kLabelCount))};
        if (std::find(turn.ground_truth.begin(), turn.ground_truth.end(), id) == turn.ground_truth.end()) {
          turn.ground_truth.push_back(id);
        }
      }
      if (turn.ground_truth.size() > 1) {
        std::erase(turn.ground_truth, domain::SkillId::no_skills());
      }
      c.turns.push_back(std::move(turn));
    }
  }
  return c;
}

corpus::TranscriptCorpus reference_shaped_corpus(std::uint64_t seed) {
  const auto& tax = domain::Taxonomy::builtin();
  std::vector<domain::SkillId> labels;
  for (const auto& row : reference::kDistribution) {
    auto id = *tax.find(row.name);
    labels.insert(labels.end(), row.count, id);
  }
  Rng rng(seed);
  rng.shuffle(labels.begin(), labels.end());

  corpus::TranscriptCorpus c;
  c.provenance = "reference-shaped";
  std::size_t next = 0;
  std::uint32_t turn_index = 0;
  auto push = [&](std::vector<domain::SkillId> skills) {
    corpus::AnnotatedTurn t;
    t.session_id = "R" + std::to_string(turn_index / 40);
    t.turn_index = turn_index % 40;
    ++turn_index;
    t.client_text = "client " + std::to_string(turn_index);
    t.worker_text = "worker " + std::to_string(turn_index);
    t.ground_truth = std::move(skills);
    c.turns.push_back(std::move(t));
  };
  while (next < labels.size()) {
    auto want = 1 + rng.uniform_index(3);
    std::vector<domain::SkillId> skills;
    std::vector<domain::SkillId> deferred;
    while (skills.size() < want && next < labels.size()) {
      auto id = labels[next++];
      bool clash = std::find(skills.begin(), skills.end(), id) != skills.end() || id.is_no_skills() ||
                   std::find(skills.begin(), skills.end(), domain::SkillId::no_skills()) != skills.end();
      if (clash && !skills.empty()) {
        deferred.push_back(id);
        break;
      }
      skills.push_back(id);
    }
    push(std::move(skills));
    for (auto id : deferred) push({id});
  }
  return c;
}

thresholds::ConfidenceMatrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t labels) {
  Rng rng(seed);
  thresholds::ConfidenceMatrix m;
  const double noise = 0.15 + 0.3 * rng.uniform01();
  for (std::size_t i = 0; i < rows; ++i) {
    m.keys.push_back("k" + std::to_string(i));
    domain::SkillSet truth;
    std::vector<double> row(labels);
    for (std::size_t j = 0; j < labels; ++j) {
      bool positive = rng.uniform01() < 0.15;
      if (positive) truth.set(j + 1);
      double base = positive ? 0.65 : 0.3;
      row[j] = std::clamp(base + noise * rng.normal(), 0.0, 1.0);
    }
    if (truth.none()) truth.set(0);
    m.scores.push_back(std::move(row));
    m.truths.push_back(truth);
  }
  return m;
}

thresholds::ConfidenceMatrix planted_matrix(std::uint64_t seed, std::size_t rows, const std::vector<double>& taus) {
  Rng rng(seed);
  const auto labels = taus.size();
  rows = std::max(rows, 2 * labels);
  thresholds::ConfidenceMatrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    m.keys.push_back("p" + std::to_string(i));
    domain::SkillSet truth;
    std::vector<double> row(labels);
    for (std::size_t j = 0; j < labels; ++j) {
      const double tau = taus[j];
      bool positive;
      if (i == 2 * j) {
        positive = true;
        row[j] = tau;
      } else if (i == 2 * j + 1) {
        positive = false;
        row[j] = tau - 0.005;
      } else {
        positive = rng.uniform01() < 0.2;
        row[j] = positive ? tau + (1.0 - tau) * rng.uniform01() : (tau - 0.005) * rng.uniform01();
      }
      if (positive) truth.set(j + 1);
    }
    if (truth.none()) truth.set(0);
    m.scores.push_back(std::move(row));
    m.truths.push_back(truth);
  }
  return m;
}

}  // namespace synthetic
