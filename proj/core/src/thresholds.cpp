#include "swtrain/thresholds.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>

#include "swtrain/error.hpp"
#include "swtrain/io.hpp"
#include "swtrain/random.hpp"
#include "swtrain/text.hpp"

namespace swtrain::thresholds {

using ordered_json = nlohmann::ordered_json;

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void require_usable(const ConfidenceMatrix& matrix) {
  matrix.validate();
  if (!matrix.has_truth()) {
    throw Error(ErrorKind::kInvalidArgument, "threshold optimization needs ground-truth labels");
  }
}

}  // namespace

void ConfidenceMatrix::validate() const {
  if (scores.empty()) throw Error(ErrorKind::kEmptyMatrix, "confidence matrix has no rows");
  const auto width = scores.front().size();
  if (width == 0 || width > domain::kSkillCount) {
    throw Error(ErrorKind::kLengthMismatch, "rows must have 1 to 20 scores");
  }
  for (const auto& row : scores) {
    if (row.size() != width) throw Error(ErrorKind::kLengthMismatch, "ragged confidence matrix");
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::kDomainError, "score outside [0, 1]");
    }
  }
  if (!keys.empty() && keys.size() != scores.size()) {
    throw Error(ErrorKind::kLengthMismatch, "key count differs from row count");
  }
  if (has_truth() && truths.size() != scores.size()) {
    throw Error(ErrorKind::kLengthMismatch, "label count differs from row count");
  }
}

const std::vector<double>* ConfidenceMatrix::find(const std::string& key) const {
  auto it = std::find(keys.begin(), keys.end(), key);
  return it == keys.end() ? nullptr : &scores[static_cast<std::size_t>(it - keys.begin())];
}

ConfidenceMatrix ConfidenceMatrix::parse(std::string_view text, const domain::Taxonomy& taxonomy) {
  ConfidenceMatrix m;
  std::size_t line_no = 0;
  std::size_t with_labels = 0;
  for (auto line : io::split_lines(text)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      m.keys.push_back(j.at("key").get<std::string>());
      m.scores.push_back(j.at("scores").get<std::vector<double>>());
      SkillSet truth;
      if (j.contains("labels")) {
        ++with_labels;
        for (const auto& s : j.at("labels")) truth.set(taxonomy.parse(s.get<std::string>()).id.index());
        if (truth.none()) truth.set(0);
      }
      m.truths.push_back(truth);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ": " + e.what(),
                  static_cast<long>(line_no));
    }
  }
  if (with_labels == 0) {
    m.truths.clear();
  } else if (with_labels != m.scores.size()) {
    throw Error(ErrorKind::kParseError, "\"labels\" must appear on every line or none");
  }
  m.validate();
  return m;
}

ConfidenceMatrix ConfidenceMatrix::load(const std::filesystem::path& path,
                                        const domain::Taxonomy& taxonomy) {
  return parse(io::read_file(path), taxonomy);
}

std::string ConfidenceMatrix::format(const domain::Taxonomy& taxonomy) const {
  std::string out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ordered_json j;
    j["key"] = keys.empty() ? std::to_string(i) : keys[i];
    j["scores"] = scores[i];
    if (has_truth()) {
      auto t = truths[i];
      t.reset(0);
      j["labels"] = taxonomy.names(t);
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string_view objective_name(Objective objective) {
  return objective == Objective::kMicroF1 ? "micro_f1" : "macro_f1";
}

Objective parse_objective(std::string_view name) {
  auto n = text::normalize_label(name);
  if (n == "micro f1" || n == "micro") return Objective::kMicroF1;
  if (n == "macro f1" || n == "macro") return Objective::kMacroF1;
  throw Error(ErrorKind::kInvalidArgument, "unknown objective: " + std::string(name));
}

std::string ThresholdVector::to_json(const domain::Taxonomy& taxonomy) const {
  ordered_json j;
  j["strategy"] = strategy;
  j["objective"] = objective_name(objective);
  j["objective_value"] = objective_value;
  auto arr = ordered_json::array();
  for (std::size_t c = 0; c < values.size(); ++c) {
    arr.push_back({{"skill", taxonomy.at(domain::SkillId::from_column(c)).name}, {"value", values[c]}});
  }
  j["thresholds"] = std::move(arr);
  return j.dump(2) + "\n";
}

ThresholdVector ThresholdVector::from_json(std::string_view text, const domain::Taxonomy& taxonomy) {
  ThresholdVector tv;
  try {
    auto j = nlohmann::json::parse(text);
    tv.strategy = j.value("strategy", "");
    tv.objective = parse_objective(j.value("objective", "micro_f1"));
    tv.objective_value = j.value("objective_value", 0.0);
    const auto& arr = j.at("thresholds");
    tv.values.assign(arr.size(), 0.0);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto id = taxonomy.parse(arr[i].at("skill").get<std::string>()).id;
      if (id.is_no_skills() || id.column() != i) {
        throw Error(ErrorKind::kParseError, "thresholds must follow taxonomy order");
      }
      tv.values[i] = arr[i].at("value").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("threshold file: ") + e.what());
  }
  return tv;
}

void ThresholdVector::save(const std::filesystem::path& path, const domain::Taxonomy& taxonomy) const {
  io::write_file_atomic(path, to_json(taxonomy));
}

ThresholdVector ThresholdVector::load(const std::filesystem::path& path,
                                      const domain::Taxonomy& taxonomy) {
  return from_json(io::read_file(path), taxonomy);
}

SkillSet predict_row(std::span<const double> thresholds, std::span<const double> row) {
  SkillSet out;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] >= thresholds[c]) out.set(c + 1);
  }
  if (out.none()) out.set(0);
  return out;
}

std::vector<eval::PredictionRecord> apply(std::span<const double> thresholds,
                                          const ConfidenceMatrix& matrix) {
  if (thresholds.size() != matrix.label_count()) {
    throw Error(ErrorKind::kLengthMismatch,
                "threshold vector has " + std::to_string(thresholds.size()) + " values, matrix has " +
                    std::to_string(matrix.label_count()) + " columns");
  }
  std::vector<eval::PredictionRecord> out;
  out.reserve(matrix.size());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    eval::PredictionRecord rec;
    rec.key = matrix.keys.empty() ? std::to_string(i) : matrix.keys[i];
    rec.predicted = predict_row(thresholds, matrix.scores[i]);
    if (matrix.has_truth()) rec.ground_truth = matrix.truths[i];
    out.push_back(std::move(rec));
  }
  return out;
}

ObjectiveEvaluator::ObjectiveEvaluator(const ConfidenceMatrix& matrix, Objective objective)
    : matrix_(matrix), objective_(objective) {
  require_usable(matrix);
}

double ObjectiveEvaluator::operator()(std::span<const double> thresholds) const {
  if (thresholds.size() != matrix_.label_count()) {
    throw Error(ErrorKind::kLengthMismatch, "threshold vector width");
  }
  const auto n = matrix_.size();
  if (objective_ == Objective::kMicroF1) {
    std::size_t inter = 0, predicted = 0, truth = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto p = predict_row(thresholds, matrix_.scores[i]);
      inter += (p & matrix_.truths[i]).count();
      predicted += p.count();
      truth += matrix_.truths[i].count();
    }
    return eval::harmonic(ratio(inter, predicted), ratio(inter, truth));
  }
  double p_sum = 0.0, r_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = predict_row(thresholds, matrix_.scores[i]);
    auto inter = (p & matrix_.truths[i]).count();
    p_sum += ratio(inter, p.count());
    r_sum += ratio(inter, matrix_.truths[i].count());
  }
  auto dn = static_cast<double>(n);
  return eval::harmonic(p_sum / dn, r_sum / dn);
}

ThresholdVector optimize_static(const ConfidenceMatrix& matrix, Objective objective) {
  ObjectiveEvaluator eval(matrix, objective);
  std::vector<double> t(matrix.label_count(), 0.0);
  ThresholdVector best{t, "static", objective, -1.0};
  for (int i = 0; i <= kGridSteps; ++i) {
    std::fill(t.begin(), t.end(), grid_value(i));
    double v = eval(t);
    if (v > best.objective_value) {
      best.values = t;
      best.objective_value = v;
    }
  }
  return best;
}

ThresholdVector optimize_independent(const ConfidenceMatrix& matrix, Objective objective) {
  ObjectiveEvaluator eval(matrix, objective);
  const auto width = matrix.label_count();
  std::vector<double> t(width, 1.0);
  for (std::size_t c = 0; c < width; ++c) {
    const auto bit = c + 1;
    std::size_t positives = 0;
    for (const auto& truth : matrix.truths) positives += truth.test(bit);
    if (positives == 0) continue;
    double best_f1 = -1.0;
    for (int g = 0; g <= kGridSteps; ++g) {
      const double thr = grid_value(g);
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < matrix.size(); ++i) {
        bool p = matrix.scores[i][c] >= thr;
        bool y = matrix.truths[i].test(bit);
        tp += p && y;
        fp += p && !y;
        fn += !p && y;
      }
      double f1 = ratio(2 * tp, 2 * tp + fp + fn);
      if (f1 > best_f1) {
        best_f1 = f1;
        t[c] = thr;
      }
    }
  }
  return ThresholdVector{t, "independent", objective, eval(t)};
}

void GaParams::validate() const {
  if (population < 2) throw Error(ErrorKind::kInvalidArgument, "GA population must be at least 2");
  if (generations < 0) throw Error(ErrorKind::kInvalidArgument, "GA generations must be nonnegative");
  if (tournament_size < 1) throw Error(ErrorKind::kInvalidArgument, "GA tournament size must be positive");
  if (elitism < 1 || elitism > population) {
    throw Error(ErrorKind::kInvalidArgument, "GA elitism must lie in [1, population]");
  }
  auto is_rate = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!is_rate(crossover_rate) || !is_rate(mutation_rate) || !(mutation_sigma >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "GA rates must lie in [0, 1] and sigma be nonnegative");
  }
}

ThresholdVector optimize_joint_ga(const ConfidenceMatrix& matrix, Objective objective,
                                  const GaParams& params, std::uint64_t seed) {
  params.validate();
  ObjectiveEvaluator eval(matrix, objective);
  const auto width = matrix.label_count();
  const auto pop_size = static_cast<std::size_t>(params.population);
  Rng rng(seed);

  std::vector<std::vector<double>> pop;
  pop.reserve(pop_size);
  pop.push_back(optimize_static(matrix, objective).values);
  pop.push_back(optimize_independent(matrix, objective).values);
  while (pop.size() < pop_size) {
    std::vector<double> v(width);
    for (auto& x : v) x = rng.uniform01();
    pop.push_back(std::move(v));
  }
  std::vector<double> fitness(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) fitness[i] = eval(pop[i]);

  auto rank = [&] {
    std::vector<std::size_t> order(pop_size);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    return order;
  };
  auto tournament = [&] {
    auto best = rng.uniform_index(pop_size);
    for (int k = 1; k < params.tournament_size; ++k) {
      auto c = rng.uniform_index(pop_size);
      if (fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best)) best = c;
    }
    return best;
  };

  for (int gen = 0; gen < params.generations; ++gen) {
    auto order = rank();
    std::vector<std::vector<double>> next;
    std::vector<double> next_fitness;
    next.reserve(pop_size);
    for (int e = 0; e < params.elitism; ++e) {
      next.push_back(pop[order[static_cast<std::size_t>(e)]]);
      next_fitness.push_back(fitness[order[static_cast<std::size_t>(e)]]);
    }
    while (next.size() < pop_size) {
      const auto& a = pop[tournament()];
      const auto& b = pop[tournament()];
      auto child = a;
      if (rng.uniform01() < params.crossover_rate) {
        for (std::size_t g = 0; g < width; ++g) {
          if (rng.uniform01() < 0.5) child[g] = b[g];
        }
      }
      for (auto& g : child) {
        if (rng.uniform01() < params.mutation_rate) {
          g = std::clamp(g + params.mutation_sigma * rng.normal(), 0.0, 1.0);
        }
      }
      next_fitness.push_back(eval(child));
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    fitness = std::move(next_fitness);
  }

  auto best = rank().front();
  return ThresholdVector{pop[best], "joint", objective, fitness[best]};
}

}  // namespace swtrain::thresholds
