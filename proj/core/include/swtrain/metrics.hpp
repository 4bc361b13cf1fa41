#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swtrain/domain.hpp"

namespace swtrain::eval {

using domain::SkillId;
using domain::SkillSet;

struct PredictionRecord {
  std::string key;
  SkillSet predicted;
  SkillSet ground_truth;
  // Optional output order of `predicted` (most likely first); used only when
  // writing prediction files.
  std::vector<SkillId> ranked;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Harmonic mean, 0 when both inputs are 0.
double harmonic(double p, double r);

// All of these throw Error{kEmptyInput} on an empty span.
double accuracy_any_overlap(std::span<const PredictionRecord> records);
// Per-sample precision and recall averaged over samples; F1 of the two means.
// A sample with no predictions has precision 0.
PRF macro_metrics(std::span<const PredictionRecord> records);
// Summed intersections over summed set sizes.
PRF micro_metrics(std::span<const PredictionRecord> records);
// Binary F1 per label (index = SkillId), 2TP / (2TP + FP + FN); 0 for a label
// absent from every prediction and truth.
std::array<double, domain::kLabelCount> per_skill_f1(std::span<const PredictionRecord> records);
double average_predicted(std::span<const PredictionRecord> records);

struct MetricsReport {
  std::size_t samples = 0;
  double accuracy = 0.0;
  PRF macro;
  PRF micro;
  double avg_predicted_skills = 0.0;
  std::array<double, domain::kLabelCount> per_skill_f1{};
};

MetricsReport compute_report(std::span<const PredictionRecord> records);

struct FocalLossParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

// -alpha * (1 - p_t)^gamma * ln(p_t), p_t = p for positives and 1 - p
// otherwise. Throws Error{kDomainError} unless 0 < p < 1.
double focal_loss(double p, bool is_positive, FocalLossParams params = {});

using NamedReport = std::pair<std::string, MetricsReport>;

// One row per method: Acc, Macro P/R/F1, Micro P/R/F1, Avg. skills.
std::string render_summary_table(std::span<const NamedReport> reports);
// One row per skill (20, taxonomy order), one F1 column per method.
std::string render_per_skill_table(std::span<const NamedReport> reports,
                                   const domain::Taxonomy& taxonomy);
std::string report_json(std::span<const NamedReport> reports, const domain::Taxonomy& taxonomy);

// Prediction files: one JSON object per line,
// {"key": "...", "predicted": ["Empathy", ...], "ground_truth": [...]}.
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               const domain::Taxonomy& taxonomy);
std::vector<PredictionRecord> parse_predictions(std::string_view text,
                                                const domain::Taxonomy& taxonomy);
std::string format_predictions(std::span<const PredictionRecord> records,
                               const domain::Taxonomy& taxonomy);

}  // namespace swtrain::eval
