#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>

#include "oracles.hpp"
#include "reference_tables.hpp"
#include "samples.hpp"
#include "swtrain/domain.hpp"
#include "swtrain/error.hpp"
#include "swtrain/metrics.hpp"

using namespace swtrain;
using namespace swtrain::eval;

namespace {

// A=1, B=2, C=3, D=4
std::vector<oracle::Sample> worked() { return {{{1, 2}, {1}}, {{3}, {3, 4}}}; }

}  // namespace

TEST(Metrics, WorkedExample) {
  auto recs = samples::to_records(worked());
  auto macro = macro_metrics(recs);
  EXPECT_EQ(macro.precision, 0.75);
  EXPECT_EQ(macro.recall, 0.75);
  EXPECT_EQ(macro.f1, 0.75);
  auto micro = micro_metrics(recs);
  EXPECT_DOUBLE_EQ(micro.f1, 2.0 / 3.0);
  EXPECT_EQ(accuracy_any_overlap(recs), 1.0);
  EXPECT_EQ(average_predicted(recs), 1.5);
  auto per = per_skill_f1(recs);
  EXPECT_EQ(per[1], 1.0);
  EXPECT_NEAR(per[2], 0.0, 0.0);
  EXPECT_EQ(per[3], 1.0);
  EXPECT_EQ(per[4], 0.0);
}

TEST(Metrics, EmptyPredictionsAndEdgeCases) {
  std::vector<oracle::Sample> s = {{{}, {1}}, {{2}, {}}};
  auto recs = samples::to_records(s);
  auto m = macro_metrics(recs);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(accuracy_any_overlap(recs), 0.0);
  EXPECT_EQ(harmonic(0, 0), 0.0);
}

TEST(Metrics, EmptyInputIsAnError) {
  std::vector<PredictionRecord> none;
  for (auto fn : {+[](std::span<const PredictionRecord> r) { return accuracy_any_overlap(r); },
                  +[](std::span<const PredictionRecord> r) { return macro_metrics(r).f1; },
                  +[](std::span<const PredictionRecord> r) { return micro_metrics(r).f1; },
                  +[](std::span<const PredictionRecord> r) { return average_predicted(r); }}) {
    try {
      fn(none);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kEmptyInput);
    }
  }
}

TEST(Metrics, RandomSetsMatchOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = samples::random_samples(rng);
    auto report = compute_report(samples::to_records(s));
    EXPECT_NEAR(report.accuracy, oracle::accuracy(s), 1e-9);
    auto om = oracle::macro(s), oi = oracle::micro(s);
    EXPECT_NEAR(report.macro.precision, om.precision, 1e-9);
    EXPECT_NEAR(report.macro.recall, om.recall, 1e-9);
    EXPECT_NEAR(report.macro.f1, om.f1, 1e-9);
    EXPECT_NEAR(report.micro.precision, oi.precision, 1e-9);
    EXPECT_NEAR(report.micro.recall, oi.recall, 1e-9);
    EXPECT_NEAR(report.micro.f1, oi.f1, 1e-9);
    EXPECT_NEAR(report.avg_predicted_skills, oracle::average_predicted(s), 1e-9);
    for (int j = 0; j < 21; ++j) EXPECT_NEAR(report.per_skill_f1[j], oracle::label_f1(s, j), 1e-9);
  }
}

TEST(FocalLoss, ReducesToCrossEntropy) {
  for (int i = 1; i <= 99; ++i) {
    double p = i / 100.0;
    for (bool pos : {true, false}) {
      EXPECT_NEAR(focal_loss(p, pos, {1.0, 0.0}), oracle::cross_entropy(p, pos), 1e-12);
    }
  }
}

TEST(FocalLoss, DefaultsAndWorkedValue) {
  FocalLossParams d;
  EXPECT_EQ(d.alpha, reference::kFocalAlpha);
  EXPECT_EQ(d.gamma, reference::kFocalGamma);
  const double exact = -0.25 * 0.01 * std::log(0.9);
  EXPECT_NEAR(focal_loss(0.9, true), exact, 1e-12);
  EXPECT_NEAR(focal_loss(0.1, false), exact, 1e-12);
  EXPECT_NEAR(focal_loss(0.9, true), reference::kFocalWorkedValue, 1e-8);
  // Confident correct predictions are down-weighted more than uncertain ones.
  EXPECT_LT(focal_loss(0.9, true) / oracle::cross_entropy(0.9, true),
            focal_loss(0.6, true) / oracle::cross_entropy(0.6, true));
}

TEST(FocalLoss, RejectsProbabilitiesOutsideTheOpenInterval) {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    try {
      focal_loss(p, true);
      FAIL() << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kDomainError);
    }
  }
}

TEST(Predictions, FormatAndParseRoundTrip) {
  const auto& tax = domain::DomainData::builtin().taxonomy;
  Rng rng(8);
  auto recs = samples::to_records(samples::random_samples(rng));
  auto text = format_predictions(recs, tax);
  auto back = parse_predictions(text, tax);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].key, recs[i].key);
    EXPECT_EQ(back[i].predicted, recs[i].predicted);
    EXPECT_EQ(back[i].ground_truth, recs[i].ground_truth);
  }
  EXPECT_EQ(format_predictions(back, tax), text);
}

TEST(Predictions, ParseErrors) {
  const auto& tax = domain::DomainData::builtin().taxonomy;
  auto kind = [&](std::string_view text) -> std::optional<ErrorKind> {
    try {
      parse_predictions(text, tax);
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  EXPECT_EQ(kind("{not json}\n"), ErrorKind::kParseError);
  EXPECT_EQ(kind(R"({"key":"a","predicted":["Telepathy"],"ground_truth":[]})"), ErrorKind::kUnknownSkill);
  EXPECT_EQ(kind(R"({"key":"a","ground_truth":[]})"), ErrorKind::kParseError);
}

TEST(Tables, SummaryAndPerSkillLayout) {
  const auto& tax = domain::DomainData::builtin().taxonomy;
  std::vector<NamedReport> reports = {{"worked", compute_report(samples::to_records(worked()))}};
  auto summary = render_summary_table(reports);
  EXPECT_NE(summary.find("worked"), std::string::npos);
  EXPECT_NE(summary.find("0.7500"), std::string::npos);
  EXPECT_NE(summary.find("0.6667"), std::string::npos);
  auto per = render_per_skill_table(reports, tax);
  auto first = per.find("Active Listening");
  auto last = per.find("Exploring Options");
  ASSERT_NE(first, std::string::npos);
  ASSERT_NE(last, std::string::npos);
  EXPECT_LT(first, last);
  EXPECT_EQ(per.find("No-Skills"), std::string::npos);
  auto j = nlohmann::json::parse(report_json(reports, tax));
  EXPECT_TRUE(j.is_array() || j.is_object());
}
