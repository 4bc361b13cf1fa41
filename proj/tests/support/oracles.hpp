#pragma once

// Brute-force reference implementations. They share no code with the library
// beyond plain containers, and favor the most literal formulation.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Sample {
  std::set<int> predicted;
  std::set<int> truth;
};

struct Prf {
  double precision = 0, recall = 0, f1 = 0;
};

inline std::size_t overlap(const std::set<int>& a, const std::set<int>& b) {
  std::size_t n = 0;
  for (int x : a) n += b.count(x);
  return n;
}

inline double hmean(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

inline double accuracy(const std::vector<Sample>& s) {
  double hits = 0;
  for (const auto& x : s) hits += overlap(x.predicted, x.truth) > 0 ? 1 : 0;
  return hits / s.size();
}

inline Prf macro(const std::vector<Sample>& s) {
  double p = 0, r = 0;
  for (const auto& x : s) {
    double inter = overlap(x.predicted, x.truth);
    p += x.predicted.empty() ? 0.0 : inter / x.predicted.size();
    r += x.truth.empty() ? 0.0 : inter / x.truth.size();
  }
  p /= s.size();
  r /= s.size();
  return {p, r, hmean(p, r)};
}

inline Prf micro(const std::vector<Sample>& s) {
  double inter = 0, pred = 0, truth = 0;
  for (const auto& x : s) {
    inter += overlap(x.predicted, x.truth);
    pred += x.predicted.size();
    truth += x.truth.size();
  }
  double p = pred == 0 ? 0.0 : inter / pred;
  double r = truth == 0 ? 0.0 : inter / truth;
  return {p, r, hmean(p, r)};
}

// Binary F1 of one label from its confusion counts.
inline double label_f1(const std::vector<Sample>& s, int label) {
  double tp = 0, fp = 0, fn = 0;
  for (const auto& x : s) {
    bool p = x.predicted.count(label) != 0;
    bool t = x.truth.count(label) != 0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  if (tp == 0) return 0.0;
  return hmean(tp / (tp + fp), tp / (tp + fn));
}

inline double average_predicted(const std::vector<Sample>& s) {
  double n = 0;
  for (const auto& x : s) n += x.predicted.size();
  return n / s.size();
}

// ---- BM25 ----

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> bm25_scores(const std::vector<std::string>& docs, const std::string& query,
                                       double k1 = 1.2, double b = 0.75) {
  const double n = docs.size();
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    toks.push_back(words(d));
    total += toks.back().size();
  }
  const double avgdl = total / n;
  std::vector<double> scores(docs.size(), 0.0);
  for (const auto& q : words(query)) {
    double df = 0;
    for (const auto& t : toks) df += std::count(t.begin(), t.end(), q) > 0 ? 1 : 0;
    if (df == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double tf = std::count(toks[i].begin(), toks[i].end(), q);
      const double dl = toks[i].size();
      const double denom = tf + k1 * (1 - b + (avgdl > 0 ? b * dl / avgdl : 0.0));
      scores[i] += denom == 0 ? 0.0 : idf * tf * (k1 + 1) / denom;
    }
  }
  return scores;
}

// ---- cosine ----

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Indices by descending score, ties to the lower index, first min(k, n).
inline std::vector<std::size_t> topk(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

// ---- skill score ----

// Sum of w * ln(1 + n), written out label by label.
inline double skill_score(const std::vector<int>& weights, const std::vector<unsigned>& counts) {
  double s = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * std::log(1.0 + counts[j]);
  return s;
}

inline double cross_entropy(double p, bool positive) { return positive ? -std::log(p) : -std::log(1.0 - p); }

// ---- thresholds ----

// Label sets from scores: column j is label j + 1; empty becomes {0}.
inline std::set<int> threshold_row(const std::vector<double>& row, const std::vector<double>& t) {
  std::set<int> out;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] >= t[j]) out.insert(static_cast<int>(j) + 1);
  }
  if (out.empty()) out.insert(0);
  return out;
}

inline double micro_f1_at(const std::vector<std::vector<double>>& rows, const std::vector<std::set<int>>& truths,
                          const std::vector<double>& t) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < rows.size(); ++i) s.push_back({threshold_row(rows[i], t), truths[i]});
  return micro(s).f1;
}

// Exhaustive search over t = i/100 for one shared threshold; ties keep the
// smallest t. Returns (t, objective).
inline std::pair<double, double> best_static(const std::vector<std::vector<double>>& rows,
                                             const std::vector<std::set<int>>& truths) {
  double best_t = 0, best = -1;
  for (int i = 0; i <= 100; ++i) {
    double t = i / 100.0;
    double v = micro_f1_at(rows, truths, std::vector<double>(rows.front().size(), t));
    if (v > best + 1e-12) {
      best = v;
      best_t = t;
    }
  }
  return {best_t, best};
}

// Per label: the grid t maximizing binary F1 (smallest on ties), 1.0 when the
// label has no positive.
inline std::vector<double> best_independent(const std::vector<std::vector<double>>& rows,
                                            const std::vector<std::set<int>>& truths) {
  std::vector<double> out;
  for (std::size_t j = 0; j < rows.front().size(); ++j) {
    const int label = static_cast<int>(j) + 1;
    bool any = false;
    for (const auto& t : truths) any = any || t.count(label);
    if (!any) {
      out.push_back(1.0);
      continue;
    }
    double best_t = 0, best = -1;
    for (int i = 0; i <= 100; ++i) {
      double t = i / 100.0;
      std::vector<Sample> s;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        Sample x;
        if (rows[r][j] >= t) x.predicted.insert(label);
        if (truths[r].count(label)) x.truth.insert(label);
        s.push_back(x);
      }
      double v = label_f1(s, label);
      if (v > best + 1e-12) {
        best = v;
        best_t = t;
      }
    }
    out.push_back(best_t);
  }
  return out;
}

}  // namespace oracle
