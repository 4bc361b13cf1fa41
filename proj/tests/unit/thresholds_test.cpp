#include <gtest/gtest.h>

#include <optional>

#include "matrix_oracle.hpp"
#include "oracles.hpp"
#include "samples.hpp"
#include "scenario.hpp"
#include "synthetic.hpp"
#include "swtrain/error.hpp"
#include "swtrain/metrics.hpp"
#include "swtrain/random.hpp"
#include "swtrain/thresholds.hpp"

using namespace swtrain;
using namespace swtrain::thresholds;

namespace {

const domain::Taxonomy& tax() { return domain::DomainData::builtin().taxonomy; }

std::optional<ErrorKind> parse_kind(std::string_view text) {
  try {
    ConfidenceMatrix::parse(text, tax()).validate();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

GaParams small_ga() {
  GaParams p;
  p.population = 16;
  p.generations = 15;
  return p;
}

}  // namespace

TEST(Matrix, ParseAndValidationErrors) {
  EXPECT_EQ(parse_kind(""), ErrorKind::kEmptyMatrix);
  EXPECT_EQ(parse_kind(R"({"key":"a","scores":[0.1,0.2]})"
                       "\n"
                       R"({"key":"b","scores":[0.1]})"),
            ErrorKind::kLengthMismatch);
  EXPECT_EQ(parse_kind(R"({"key":"a","scores":[1.5]})"), ErrorKind::kDomainError);
  EXPECT_EQ(parse_kind(R"({"key":"a","scores":[0.5],"labels":[]})"
                       "\n"
                       R"({"key":"b","scores":[0.5]})"),
            ErrorKind::kParseError);
  EXPECT_EQ(parse_kind("not json"), ErrorKind::kParseError);
  EXPECT_EQ(parse_kind(R"({"key":"a","scores":[0.5],"labels":["Empathy"]})"), std::nullopt);
}

TEST(Matrix, FormatParseRoundTrip) {
  auto m = synthetic::random_matrix(4, 30);
  auto back = ConfidenceMatrix::parse(m.format(tax()), tax());
  EXPECT_EQ(back.keys, m.keys);
  EXPECT_EQ(back.scores, m.scores);
  EXPECT_EQ(back.truths, m.truths);
  EXPECT_NE(back.find("k3"), nullptr);
  EXPECT_EQ(back.find("nope"), nullptr);
}

TEST(Apply, EmptyPredictionBecomesNoSkills) {
  std::vector<double> t = {0.5, 0.5};
  EXPECT_EQ(predict_row(t, std::vector<double>{0.1, 0.2}), SkillSet{1});
  auto s = predict_row(t, std::vector<double>{0.5, 0.9});
  EXPECT_TRUE(s.test(1) && s.test(2) && !s.test(0));
  auto m = synthetic::random_matrix(1, 5, 3);
  EXPECT_THROW(thresholds::apply(t, m), Error);
}

TEST(Evaluator, AgreesWithEvalMetricsExactly) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = synthetic::random_matrix(rng.next(), 5 + rng.uniform_index(60), 1 + rng.uniform_index(20));
    std::vector<double> t(m.label_count());
    for (auto& x : t) x = grid_value(static_cast<int>(rng.uniform_index(101)));
    auto recs = thresholds::apply(t, m);
    EXPECT_EQ(ObjectiveEvaluator(m, Objective::kMicroF1)(t), eval::micro_metrics(recs).f1);
    EXPECT_EQ(ObjectiveEvaluator(m, Objective::kMacroF1)(t), eval::macro_metrics(recs).f1);
    EXPECT_NEAR(ObjectiveEvaluator(m, Objective::kMicroF1)(t),
                oracle::micro_f1_at(m.scores, matrix_oracle::truth_sets(m), t), 1e-12);
  }
}

TEST(Static, RecoversPlantedThreshold) {
  for (int tau_i : {1, 17, 40, 63, 99, 100}) {
    double tau = grid_value(tau_i);
    auto m = synthetic::planted_matrix(static_cast<std::uint64_t>(tau_i), 80, std::vector<double>(7, tau));
    auto r = optimize_static(m);
    for (double v : r.values) EXPECT_EQ(v, tau) << tau_i;
    EXPECT_EQ(r.objective_value, 1.0);
    EXPECT_EQ(r.strategy, "static");
  }
}

TEST(Static, MatchesExhaustiveSearch) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = synthetic::random_matrix(seed, 40, 20);
    auto [t, v] = oracle::best_static(m.scores, matrix_oracle::truth_sets(m));
    auto r = optimize_static(m);
    EXPECT_EQ(r.values.front(), t) << seed;
    EXPECT_NEAR(r.objective_value, v, 1e-12);
  }
}

TEST(Independent, RecoversPlantedThresholds) {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> taus(20);
    for (auto& t : taus) t = grid_value(1 + static_cast<int>(rng.uniform_index(100)));
    auto m = synthetic::planted_matrix(rng.next(), 120, taus);
    auto r = optimize_independent(m);
    EXPECT_EQ(r.values, taus);
    EXPECT_EQ(r.objective_value, 1.0);
  }
}

TEST(Independent, MatchesExhaustiveSearchAndSentinel) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = synthetic::random_matrix(seed, 30, 20);
    auto want = oracle::best_independent(m.scores, matrix_oracle::truth_sets(m));
    EXPECT_EQ(optimize_independent(m).values, want) << seed;
  }
  ConfidenceMatrix m{{"a", "b"}, {{0.3, 0.9}, {0.6, 0.2}}, {SkillSet{0b010}, SkillSet{0b001}}};
  auto r = optimize_independent(m);
  EXPECT_EQ(r.values[1], 1.0);  // label 2 has no positive
}

TEST(JointGa, NeverWorseThanSeedsAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto m = synthetic::random_matrix(100 + seed, 40);
    double floor = std::max(optimize_static(m).objective_value, optimize_independent(m).objective_value);
    auto a = optimize_joint_ga(m, Objective::kMicroF1, small_ga(), seed);
    auto b = optimize_joint_ga(m, Objective::kMicroF1, small_ga(), seed);
    EXPECT_GE(a.objective_value, floor);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.objective_value, ObjectiveEvaluator(m, Objective::kMicroF1)(a.values));
    for (double v : a.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(JointGa, MacroObjectiveAndZeroGenerations) {
  auto m = synthetic::random_matrix(9, 30);
  GaParams p = small_ga();
  p.generations = 0;
  auto r = optimize_joint_ga(m, Objective::kMacroF1, p, 1);
  double floor = std::max(optimize_static(m, Objective::kMacroF1).objective_value,
                          optimize_independent(m, Objective::kMacroF1).objective_value);
  EXPECT_EQ(r.objective_value, floor);
  EXPECT_EQ(r.objective, Objective::kMacroF1);
}

TEST(JointGa, ParameterValidation) {
  auto bad = [](auto mutate) {
    GaParams p;
    mutate(p);
    EXPECT_THROW(p.validate(), Error);
  };
  bad([](GaParams& p) { p.population = 1; });
  bad([](GaParams& p) { p.generations = -1; });
  bad([](GaParams& p) { p.tournament_size = 0; });
  bad([](GaParams& p) { p.elitism = 0; });
  bad([](GaParams& p) { p.mutation_rate = 1.5; });
  EXPECT_NO_THROW(GaParams{}.validate());
}

TEST(Optimizers, RequireGroundTruth) {
  auto m = synthetic::random_matrix(1, 5, 3);
  m.truths.clear();
  EXPECT_THROW(optimize_static(m), Error);
}

TEST(ThresholdVector, JsonRoundTrip) {
  auto m = synthetic::random_matrix(2, 40);
  auto r = optimize_independent(m);
  auto back = ThresholdVector::from_json(r.to_json(tax()), tax());
  EXPECT_EQ(back.values, r.values);
  EXPECT_EQ(back.strategy, r.strategy);
  EXPECT_EQ(back.objective, r.objective);
  EXPECT_EQ(back.objective_value, r.objective_value);
  scenario::TempDir dir;
  r.save(dir.path() / "t.json", tax());
  EXPECT_EQ(ThresholdVector::load(dir.path() / "t.json", tax()).values, r.values);
  EXPECT_EQ(parse_objective("macro_f1"), Objective::kMacroF1);
  EXPECT_THROW(parse_objective("accuracy"), Error);
}
