#include "swtrain/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "swtrain/error.hpp"
#include "swtrain/random.hpp"
#include "swtrain/text.hpp"

namespace swtrain::corpus {

using ordered_json = nlohmann::ordered_json;

namespace {

bool is_others_label(std::string_view raw) {
  auto n = text::normalize_label(raw);
  return n == "others" || n == "other";
}

Error line_error(ErrorKind kind, std::size_t line, const std::string& what) {
  return Error(kind, "line " + std::to_string(line) + ": " + what, static_cast<long>(line));
}

std::size_t floor_count(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "split fractions must lie in (0, 1)");
  }
  // The epsilon keeps products like 0.29 * 100 from flooring to 28.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

TranscriptCorpus select(const TranscriptCorpus& corpus, std::vector<std::size_t> indices,
                        std::string provenance) {
  std::sort(indices.begin(), indices.end());
  TranscriptCorpus out;
  out.provenance = std::move(provenance);
  out.turns.reserve(indices.size());
  for (auto i : indices) out.turns.push_back(corpus.turns[i]);
  return out;
}

Split partition(const TranscriptCorpus& corpus, double fraction, std::uint64_t seed,
                SplitMode mode, const std::string& first_tag, const std::string& second_tag) {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  Rng rng(seed);

  if (mode == SplitMode::kByTurn) {
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    auto cut = floor_count(fraction, order.size());
    first.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
    second.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  } else {
    std::vector<std::string> sessions;
    std::unordered_set<std::string> seen;
    for (const auto& t : corpus.turns) {
      if (seen.insert(t.session_id).second) sessions.push_back(t.session_id);
    }
    rng.shuffle(sessions.begin(), sessions.end());
    auto cut = floor_count(fraction, sessions.size());
    std::unordered_set<std::string> chosen(sessions.begin(),
                                           sessions.begin() + static_cast<std::ptrdiff_t>(cut));
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      (chosen.count(corpus.turns[i].session_id) ? first : second).push_back(i);
    }
  }

  return Split{select(corpus, std::move(first), corpus.provenance + " [" + first_tag + "]"),
               select(corpus, std::move(second), corpus.provenance + " [" + second_tag + "]")};
}

}  // namespace

void TranscriptCorpus::validate() const {
  std::unordered_set<std::string> keys;
  for (const auto& t : turns) {
    if (!keys.insert(t.key()).second) {
      throw Error(ErrorKind::kDuplicateTurn, "duplicate turn " + t.key());
    }
  }
}

IngestResult ingest_text(std::string_view text, const domain::Taxonomy& taxonomy,
                         std::string provenance) {
  IngestResult result;
  result.corpus.provenance = std::move(provenance);
  std::unordered_set<std::string> keys;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (text::trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }

    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw line_error(ErrorKind::kParseError, line_no, e.what());
    }

    AnnotatedTurn turn;
    std::vector<std::string> raw_skills;
    try {
      turn.session_id = j.at("session_id").get<std::string>();
      auto idx = j.at("turn").get<long long>();
      if (idx < 0) throw line_error(ErrorKind::kParseError, line_no, "turn must be nonnegative");
      turn.turn_index = static_cast<std::uint32_t>(idx);
      turn.client_text = j.at("client").get<std::string>();
      turn.worker_text = j.at("worker").get<std::string>();
      raw_skills = j.at("skills").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw line_error(ErrorKind::kParseError, line_no, e.what());
    }

    std::size_t others = 0;
    for (const auto& raw : raw_skills) {
      if (is_others_label(raw)) {
        ++others;
        continue;
      }
      auto id = taxonomy.find(raw);
      if (!id) throw line_error(ErrorKind::kUnknownSkill, line_no, "unknown skill \"" + raw + "\"");
      if (std::find(turn.ground_truth.begin(), turn.ground_truth.end(), *id) ==
          turn.ground_truth.end()) {
        turn.ground_truth.push_back(*id);
      }
    }

    if (turn.ground_truth.empty()) {
      if (others > 0) {
        ++result.dropped_others_rows;
        result.warnings.push_back("line " + std::to_string(line_no) + ": dropped turn " +
                                  turn.key() + " labeled only \"others\"");
        continue;
      }
      throw line_error(ErrorKind::kParseError, line_no,
                       "skills must be nonempty (use No-Skills explicitly)");
    }
    if (others > 0) {
      result.stripped_others_labels += others;
      result.warnings.push_back("line " + std::to_string(line_no) + ": removed \"others\" label");
    }

    if (!keys.insert(turn.key()).second) {
      throw Error(ErrorKind::kDuplicateTurn, "line " + std::to_string(line_no) +
                                                 ": duplicate turn " + turn.key(),
                  static_cast<long>(line_no));
    }
    result.corpus.turns.push_back(std::move(turn));
  }

  if (result.corpus.turns.empty() && result.dropped_others_rows == 0) {
    throw Error(ErrorKind::kParseError, "no records", 0);
  }
  return result;
}

IngestResult ingest(const std::filesystem::path& path, const domain::Taxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ingest_text(ss.str(), taxonomy, path.string());
}

std::string export_text(const TranscriptCorpus& corpus, const domain::Taxonomy& taxonomy) {
  std::string out;
  for (const auto& t : corpus.turns) {
    ordered_json j;
    j["session_id"] = t.session_id;
    j["turn"] = t.turn_index;
    j["client"] = t.client_text;
    j["worker"] = t.worker_text;
    auto skills = ordered_json::array();
    for (auto id : t.ground_truth) skills.push_back(taxonomy.at(id).name);
    j["skills"] = std::move(skills);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void export_file(const TranscriptCorpus& corpus, const domain::Taxonomy& taxonomy,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << export_text(corpus, taxonomy);
}

Split split(const TranscriptCorpus& corpus, const SplitSpec& spec) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyInput, "cannot split an empty corpus");
  return partition(corpus, spec.train_fraction, spec.seed, spec.mode, "train", "test");
}

Split carve_validation(const TranscriptCorpus& train, const SplitSpec& spec) {
  if (train.empty()) throw Error(ErrorKind::kEmptyInput, "cannot carve an empty corpus");
  // Validation gets floor(f * N); carve the complement as `first` so the floor
  // lands on the validation side.
  auto n_val = floor_count(spec.validation_fraction_of_train, train.size());
  Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return Split{select(train, std::move(rest), train.provenance + " [train']"),
               select(train, std::move(val), train.provenance + " [val]")};
}

DistributionReport distribution_report(const TranscriptCorpus& corpus) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyInput, "empty corpus");
  DistributionReport r;
  r.turns = corpus.size();
  for (const auto& t : corpus.turns) {
    for (auto id : t.ground_truth) ++r.counts[id.index()];
    r.total_labels += t.ground_truth.size();
    ++r.skills_per_turn[t.ground_truth.size()];
  }
  for (std::size_t i = 0; i < r.counts.size(); ++i) {
    r.proportions[i] = static_cast<double>(r.counts[i]) / static_cast<double>(r.total_labels);
  }
  r.mean_skills_per_turn = static_cast<double>(r.total_labels) / static_cast<double>(r.turns);
  return r;
}

namespace {

std::vector<std::size_t> by_descending_count(const DistributionReport& report) {
  std::vector<std::size_t> order(report.counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.counts[a] > report.counts[b];
  });
  return order;
}

}  // namespace

std::string render_distribution(const DistributionReport& report, const domain::Taxonomy& taxonomy) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Skill" << std::right << std::setw(8) << "Total"
      << std::setw(12) << "Proportion" << '\n';
  out << std::string(44, '-') << '\n';
  for (auto i : by_descending_count(report)) {
    out << std::left << std::setw(24) << taxonomy.at(domain::SkillId{static_cast<std::uint8_t>(i)}).name
        << std::right << std::setw(8) << report.counts[i] << std::setw(11) << std::fixed
        << std::setprecision(2) << report.proportions[i] * 100.0 << "%\n";
  }
  out << std::string(44, '-') << '\n';
  out << "Turns: " << report.turns << "  Labels: " << report.total_labels << '\n';
  out << "Skills per turn:";
  for (const auto& [k, n] : report.skills_per_turn) out << ' ' << k << ':' << n;
  out << '\n';
  out << "Mean skills per turn: " << std::fixed << std::setprecision(2)
      << report.mean_skills_per_turn << '\n';
  return out.str();
}

std::string distribution_json(const DistributionReport& report, const domain::Taxonomy& taxonomy) {
  ordered_json j;
  j["turns"] = report.turns;
  j["total_labels"] = report.total_labels;
  auto skills = ordered_json::array();
  for (auto i : by_descending_count(report)) {
    skills.push_back({{"skill", taxonomy.at(domain::SkillId{static_cast<std::uint8_t>(i)}).name},
                      {"total", report.counts[i]},
                      {"proportion", report.proportions[i]}});
  }
  j["skills"] = std::move(skills);
  auto hist = ordered_json::object();
  for (const auto& [k, n] : report.skills_per_turn) hist[std::to_string(k)] = n;
  j["skills_per_turn"] = std::move(hist);
  j["mean_skills_per_turn"] = report.mean_skills_per_turn;
  return j.dump(2) + "\n";
}

}  // namespace swtrain::corpus
