#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swtrain/domain.hpp"
#include "swtrain/metrics.hpp"

namespace swtrain::thresholds {

using domain::SkillSet;

// Per-sample confidence scores; column j scores SkillId j + 1. Full matrices
// have 20 columns, synthetic ones may have fewer.
struct ConfidenceMatrix {
  std::vector<std::string> keys;
  std::vector<std::vector<double>> scores;
  std::vector<SkillSet> truths;  // empty when the source carried no labels

  std::size_t size() const { return scores.size(); }
  std::size_t label_count() const { return scores.empty() ? 0 : scores.front().size(); }
  bool has_truth() const { return !truths.empty(); }

  // Throws EmptyMatrix, LengthMismatch (ragged rows, key/truth counts) or
  // DomainError (score outside [0, 1]).
  void validate() const;
  // Row for a sample key, or nullptr. Linear scan.
  const std::vector<double>* find(const std::string& key) const;

  // Confidence-score files, one JSON object per line:
  // {"key": "s1#3", "scores": [20 numbers in taxonomy order], "labels": ["Empathy"]}
  // "labels" is optional but must be present on every line or none; an empty
  // list means No-Skills.
  static ConfidenceMatrix parse(std::string_view text, const domain::Taxonomy& taxonomy);
  static ConfidenceMatrix load(const std::filesystem::path& path, const domain::Taxonomy& taxonomy);
  std::string format(const domain::Taxonomy& taxonomy) const;
};

enum class Objective { kMicroF1, kMacroF1 };

std::string_view objective_name(Objective objective);
Objective parse_objective(std::string_view name);

struct ThresholdVector {
  std::vector<double> values;
  std::string strategy;
  Objective objective = Objective::kMicroF1;
  double objective_value = 0.0;

  // {"strategy": "...", "objective": "micro_f1", "objective_value": x,
  //  "thresholds": [{"skill": "Active Listening", "value": 0.42}, ...]}
  std::string to_json(const domain::Taxonomy& taxonomy) const;
  static ThresholdVector from_json(std::string_view text, const domain::Taxonomy& taxonomy);
  void save(const std::filesystem::path& path, const domain::Taxonomy& taxonomy) const;
  static ThresholdVector load(const std::filesystem::path& path, const domain::Taxonomy& taxonomy);
};

// Predicted set {l_j : p_ij >= t_j}; an empty set becomes {No-Skills}.
SkillSet predict_row(std::span<const double> thresholds, std::span<const double> row);
// Throws Error{kLengthMismatch} when the vector and matrix widths differ.
std::vector<eval::PredictionRecord> apply(std::span<const double> thresholds,
                                          const ConfidenceMatrix& matrix);

// Objective of apply(thresholds, matrix) without materializing records. The
// arithmetic mirrors eval::micro_metrics / eval::macro_metrics exactly.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const ConfidenceMatrix& matrix, Objective objective);
  double operator()(std::span<const double> thresholds) const;

 private:
  const ConfidenceMatrix& matrix_;
  Objective objective_;
};

// t in {0.00, 0.01, ..., 1.00}.
inline constexpr int kGridSteps = 100;
inline double grid_value(int i) { return static_cast<double>(i) / kGridSteps; }

// Uniform threshold maximizing the objective; ties go to the smallest t.
ThresholdVector optimize_static(const ConfidenceMatrix& matrix, Objective objective = Objective::kMicroF1);

// Each label's threshold maximizes that label's binary F1; ties go to the
// smallest t; labels with no positive sample get 1.0.
ThresholdVector optimize_independent(const ConfidenceMatrix& matrix,
                                     Objective objective = Objective::kMicroF1);

struct GaParams {
  int population = 64;
  int generations = 100;
  int tournament_size = 3;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  double mutation_sigma = 0.05;
  int elitism = 2;

  // Throws Error{kInvalidArgument}.
  void validate() const;
};

// Genetic search over [0, 1]^L. The initial population holds the static and
// independent solutions, so the result is never worse than either.
ThresholdVector optimize_joint_ga(const ConfidenceMatrix& matrix, Objective objective = Objective::kMicroF1,
                                  const GaParams& params = {}, std::uint64_t seed = 0);

}  // namespace swtrain::thresholds
