#include "swtrain/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

#include "swtrain/error.hpp"
#include "swtrain/io.hpp"
#include "swtrain/text.hpp"

namespace swtrain::eval {

using ordered_json = nlohmann::ordered_json;

namespace {

void require_nonempty(std::span<const PredictionRecord> records) {
  if (records.empty()) throw Error(ErrorKind::kEmptyInput, "no prediction records");
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed4(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v;
  return out.str();
}

}  // namespace

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

double accuracy_any_overlap(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  std::size_t hits = 0;
  for (const auto& r : records) hits += (r.predicted & r.ground_truth).any() ? 1 : 0;
  return ratio(hits, records.size());
}

PRF macro_metrics(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  double p_sum = 0.0;
  double r_sum = 0.0;
  for (const auto& r : records) {
    auto inter = (r.predicted & r.ground_truth).count();
    p_sum += ratio(inter, r.predicted.count());
    r_sum += ratio(inter, r.ground_truth.count());
  }
  auto n = static_cast<double>(records.size());
  PRF out{p_sum / n, r_sum / n, 0.0};
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

PRF micro_metrics(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  std::size_t inter = 0;
  std::size_t predicted = 0;
  std::size_t truth = 0;
  for (const auto& r : records) {
    inter += (r.predicted & r.ground_truth).count();
    predicted += r.predicted.count();
    truth += r.ground_truth.count();
  }
  PRF out{ratio(inter, predicted), ratio(inter, truth), 0.0};
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

std::array<double, domain::kLabelCount> per_skill_f1(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  std::array<double, domain::kLabelCount> out{};
  for (std::size_t j = 0; j < domain::kLabelCount; ++j) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
      bool p = r.predicted.test(j);
      bool t = r.ground_truth.test(j);
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    out[j] = ratio(2 * tp, 2 * tp + fp + fn);
  }
  return out;
}

double average_predicted(std::span<const PredictionRecord> records) {
  require_nonempty(records);
  std::size_t total = 0;
  for (const auto& r : records) total += r.predicted.count();
  return ratio(total, records.size());
}

MetricsReport compute_report(std::span<const PredictionRecord> records) {
  MetricsReport report;
  report.samples = records.size();
  report.accuracy = accuracy_any_overlap(records);
  report.macro = macro_metrics(records);
  report.micro = micro_metrics(records);
  report.avg_predicted_skills = average_predicted(records);
  report.per_skill_f1 = per_skill_f1(records);
  return report;
}

double focal_loss(double p, bool is_positive, FocalLossParams params) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::kDomainError, "focal loss needs 0 < p < 1");
  }
  double pt = is_positive ? p : 1.0 - p;
  return -params.alpha * std::pow(1.0 - pt, params.gamma) * std::log(pt);
}

std::string render_summary_table(std::span<const NamedReport> reports) {
  std::size_t name_w = 6;
  for (const auto& [name, _] : reports) name_w = std::max(name_w, name.size());
  std::ostringstream out;
  auto cell = [&](const std::string& s) { out << std::setw(8) << s; };
  out << std::left << std::setw(static_cast<int>(name_w)) << "Method" << std::right;
  cell("Acc");
  out << " |";
  for (const char* h : {"MacP", "MacR", "MacF1"}) cell(h);
  out << " |";
  for (const char* h : {"MicP", "MicR", "MicF1"}) cell(h);
  out << " |";
  cell("Avg#");
  out << '\n' << std::string(name_w + 8 * 8 + 6, '-') << '\n';
  for (const auto& [name, r] : reports) {
    out << std::left << std::setw(static_cast<int>(name_w)) << name << std::right;
    cell(fixed4(r.accuracy));
    out << " |";
    cell(fixed4(r.macro.precision));
    cell(fixed4(r.macro.recall));
    cell(fixed4(r.macro.f1));
    out << " |";
    cell(fixed4(r.micro.precision));
    cell(fixed4(r.micro.recall));
    cell(fixed4(r.micro.f1));
    out << " |";
    cell(fixed4(r.avg_predicted_skills));
    out << '\n';
  }
  return out.str();
}

std::string render_per_skill_table(std::span<const NamedReport> reports,
                                   const domain::Taxonomy& taxonomy) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Skill" << std::right;
  for (const auto& [name, _] : reports) out << std::setw(std::max<int>(10, static_cast<int>(name.size()) + 2)) << name;
  out << '\n';
  for (const auto& skill : taxonomy.skills()) {
    out << std::left << std::setw(24) << skill.name << std::right;
    for (const auto& [name, r] : reports) {
      out << std::setw(std::max<int>(10, static_cast<int>(name.size()) + 2))
          << fixed4(r.per_skill_f1[skill.id.index()]);
    }
    out << '\n';
  }
  return out.str();
}

std::string report_json(std::span<const NamedReport> reports, const domain::Taxonomy& taxonomy) {
  auto arr = ordered_json::array();
  for (const auto& [name, r] : reports) {
    ordered_json j;
    j["method"] = name;
    j["samples"] = r.samples;
    j["accuracy"] = r.accuracy;
    j["macro"] = {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}};
    j["micro"] = {{"precision", r.micro.precision}, {"recall", r.micro.recall}, {"f1", r.micro.f1}};
    j["avg_predicted_skills"] = r.avg_predicted_skills;
    auto per = ordered_json::object();
    for (const auto& label : taxonomy.labels()) per[label.name] = r.per_skill_f1[label.id.index()];
    j["per_skill_f1"] = std::move(per);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<PredictionRecord> parse_predictions(std::string_view text,
                                                const domain::Taxonomy& taxonomy) {
  std::vector<PredictionRecord> out;
  std::size_t line_no = 0;
  for (auto line : io::split_lines(text)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    PredictionRecord rec;
    try {
      auto j = nlohmann::json::parse(line);
      rec.key = j.value("key", std::to_string(line_no));
      for (const auto& s : j.at("predicted")) {
        auto id = taxonomy.parse(s.get<std::string>()).id;
        if (!rec.predicted.test(id.index())) rec.ranked.push_back(id);
        rec.predicted.set(id.index());
      }
      for (const auto& s : j.at("ground_truth")) {
        rec.ground_truth.set(taxonomy.parse(s.get<std::string>()).id.index());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ": " + e.what(),
                  static_cast<long>(line_no));
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what(),
                  static_cast<long>(line_no));
    }
    if (rec.ground_truth.none()) {
      throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ": empty ground truth",
                  static_cast<long>(line_no));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path,
                                               const domain::Taxonomy& taxonomy) {
  return parse_predictions(io::read_file(path), taxonomy);
}

std::string format_predictions(std::span<const PredictionRecord> records,
                               const domain::Taxonomy& taxonomy) {
  std::string out;
  for (const auto& r : records) {
    ordered_json j;
    j["key"] = r.key;
    auto predicted = ordered_json::array();
    if (!r.ranked.empty()) {
      for (auto id : r.ranked) predicted.push_back(taxonomy.at(id).name);
    } else {
      for (const auto& name : taxonomy.names(r.predicted)) predicted.push_back(name);
    }
    j["predicted"] = std::move(predicted);
    j["ground_truth"] = taxonomy.names(r.ground_truth);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace swtrain::eval
