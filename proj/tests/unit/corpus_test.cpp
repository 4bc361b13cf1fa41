#include <gtest/gtest.h>

#include <set>

#include "reference_tables.hpp"
#include "scenario.hpp"
#include "synthetic.hpp"
#include "swtrain/corpus.hpp"
#include "swtrain/error.hpp"
#include "swtrain/io.hpp"

using namespace swtrain;
using namespace swtrain::corpus;

namespace {

const domain::Taxonomy& tax() { return domain::Taxonomy::builtin(); }

ErrorKind ingest_error(const std::string& text, long* line = nullptr) {
  try {
    ingest_text(text, tax());
  } catch (const Error& e) {
    if (line && e.detail()) *line = *e.detail();
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ErrorKind::kInvalidArgument;
}

}  // namespace

TEST(Ingest, ParsesLabelsLeniently) {
  auto r = ingest_text(
      R"({"session_id":"a","turn":1,"client":"c","worker":"w","skills":["empathy","Open ended questions","Empathy"]})"
      "\n",
      tax());
  ASSERT_EQ(r.corpus.size(), 1u);
  const auto& t = r.corpus.turns[0];
  EXPECT_EQ(t.key(), "a#1");
  EXPECT_EQ(t.ground_truth, (std::vector<domain::SkillId>{*tax().find("Empathy"), *tax().find("Open-Ended Questions")}));
}

TEST(Ingest, OthersLabelIsStrippedOrRowDropped) {
  auto r = ingest_text(
      R"({"session_id":"a","turn":1,"client":"c","worker":"w","skills":["Others"]})"
      "\n"
      R"({"session_id":"a","turn":2,"client":"c","worker":"w","skills":["others","Empathy"]})",
      tax());
  EXPECT_EQ(r.corpus.size(), 1u);
  EXPECT_EQ(r.dropped_others_rows, 1u);
  EXPECT_EQ(r.stripped_others_labels, 1u);
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Ingest, ErrorsCarryKindAndLine) {
  long line = 0;
  EXPECT_EQ(ingest_error("\n{not json}", &line), ErrorKind::kParseError);
  EXPECT_EQ(line, 2);
  EXPECT_EQ(ingest_error(R"({"session_id":"a","turn":1,"client":"c","worker":"w","skills":["Telepathy"]})", &line),
            ErrorKind::kUnknownSkill);
  EXPECT_EQ(ingest_error(R"({"session_id":"a","turn":1,"client":"c","worker":"w","skills":[]})"),
            ErrorKind::kParseError);
  EXPECT_EQ(ingest_error(R"({"session_id":"a","turn":1,"client":"c","skills":["Empathy"]})"), ErrorKind::kParseError);
  const std::string row = R"({"session_id":"a","turn":1,"client":"c","worker":"w","skills":["Empathy"]})";
  EXPECT_EQ(ingest_error(row + "\n" + row, &line), ErrorKind::kDuplicateTurn);
  EXPECT_EQ(line, 2);
}

TEST(Export, CanonicalFormRoundTripsByteForByte) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = synthetic::random_corpus(seed, 6, 7);
    auto text = export_text(c, tax());
    auto back = ingest_text(text, tax());
    EXPECT_EQ(back.corpus.turns, c.turns);
    EXPECT_EQ(export_text(back.corpus, tax()), text);
  }
}

TEST(Export, FileRoundTrip) {
  scenario::TempDir dir;
  auto c = synthetic::random_corpus(9, 3, 4);
  export_file(c, tax(), dir.path() / "c.jsonl");
  auto text = io::read_file(dir.path() / "c.jsonl");
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(ingest(dir.path() / "c.jsonl", tax()).corpus.turns, c.turns);
}

TEST(Split, FloorSizingExactPartitionAndStableOrder) {
  auto c = synthetic::random_corpus(1, 10, 9);
  for (double f : {0.01, 0.33, 0.5, 0.8, 0.99}) {
    auto s = split(c, {f, 0.1, 5, SplitMode::kByTurn});
    EXPECT_EQ(s.first.size(), static_cast<std::size_t>(std::floor(f * c.size())));
    EXPECT_EQ(s.first.size() + s.second.size(), c.size());
    std::set<std::string> keys;
    for (const auto* part : {&s.first, &s.second}) {
      std::size_t last = 0;
      bool first = true;
      for (const auto& t : part->turns) {
        EXPECT_TRUE(keys.insert(t.key()).second);
        auto pos = std::find(c.turns.begin(), c.turns.end(), t) - c.turns.begin();
        if (!first) {
          EXPECT_GT(static_cast<std::size_t>(pos), last);
        }
        last = static_cast<std::size_t>(pos);
        first = false;
      }
    }
    EXPECT_EQ(keys.size(), c.size());
  }
}

TEST(Split, SeedDeterminesAssignment) {
  auto c = synthetic::random_corpus(2, 8, 6);
  EXPECT_EQ(split(c, {0.8, 0.1, 11}).first, split(c, {0.8, 0.1, 11}).first);
  EXPECT_NE(split(c, {0.8, 0.1, 11}).first, split(c, {0.8, 0.1, 12}).first);
}

TEST(Split, BySessionKeepsSessionsWhole) {
  auto c = synthetic::random_corpus(3, 12, 5);
  auto s = split(c, {0.75, 0.1, 4, SplitMode::kBySession});
  std::set<std::string> train_sessions, test_sessions;
  for (const auto& t : s.first.turns) train_sessions.insert(t.session_id);
  for (const auto& t : s.second.turns) test_sessions.insert(t.session_id);
  EXPECT_EQ(train_sessions.size(), 9u);
  for (const auto& id : train_sessions) EXPECT_FALSE(test_sessions.count(id));
}

TEST(Split, ValidationCarveTakesFloorOfTrain) {
  auto c = synthetic::random_corpus(4, 10, 8);
  auto s = split(c, {0.8, 0.1, 1});
  auto v = carve_validation(s.first, {0.8, 0.1, 1});
  EXPECT_EQ(v.second.size(), static_cast<std::size_t>(std::floor(0.1 * s.first.size())));
  EXPECT_EQ(v.first.size() + v.second.size(), s.first.size());
}

TEST(Split, EmptyCorpusIsRejected) { EXPECT_THROW(split(TranscriptCorpus{}, {}), Error); }

TEST(Distribution, ProportionsSumToOneAndMatchCounts) {
  auto c = synthetic::random_corpus(5, 10, 10);
  auto r = distribution_report(c);
  double sum = 0;
  std::size_t labels = 0;
  for (const auto& t : c.turns) labels += t.ground_truth.size();
  for (double p : r.proportions) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_EQ(r.total_labels, labels);
  EXPECT_DOUBLE_EQ(r.mean_skills_per_turn, static_cast<double>(labels) / c.size());
  std::size_t turns = 0;
  for (const auto& [k, n] : r.skills_per_turn) turns += n;
  EXPECT_EQ(turns, c.size());
}

TEST(Distribution, ReferenceShapedCorpusReproducesPlantedProportions) {
  auto c = synthetic::reference_shaped_corpus(17);
  auto r = distribution_report(c);
  std::size_t total = 0;
  for (const auto& row : reference::kDistribution) total += row.count;
  ASSERT_EQ(r.total_labels, total);
  for (const auto& row : reference::kDistribution) {
    auto id = *tax().find(row.name);
    EXPECT_EQ(r.counts[id.index()], row.count) << row.name;
    EXPECT_NEAR(r.proportions[id.index()], static_cast<double>(row.count) / total, 1e-12);
  }
  auto table = render_distribution(r, tax());
  EXPECT_LT(table.find("Active Listening"), table.find("Clarifying"));
  auto j = nlohmann::json::parse(distribution_json(r, tax()));
  EXPECT_TRUE(j.is_object());
}
