#include "swtrain/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>
#include <tuple>

#include "swtrain/error.hpp"
#include "swtrain/gateway.hpp"
#include "swtrain/text.hpp"

namespace swtrain::classify {

namespace {

constexpr std::string_view kTask =
    "Identify the counseling skills a social worker uses in a single utterance from a "
    "conversation with a client.";

constexpr std::string_view kAnswerFormat =
    "Answer with the names of the skills used in the social worker's utterance to classify, one "
    "per line, ordered from most to least likely. Use only names from the skill list. If no "
    "skill applies, answer No-Skills.";

std::string speaker_tag(domain::Speaker s) {
  return s == domain::Speaker::kClient ? "Client" : "Social Worker";
}

void render_label_names(std::ostringstream& out, const domain::Taxonomy& taxonomy) {
  for (const auto& skill : taxonomy.skills()) out << "- " << skill.name << '\n';
  out << "- " << taxonomy.no_skills().name << '\n';
}

void render_conversation(std::ostringstream& out, const ClassificationRequest& request) {
  if (!request.history.empty()) {
    out << "Conversation so far:\n";
    for (const auto& u : request.history) out << speaker_tag(u.speaker) << ": " << u.text << '\n';
    out << '\n';
  }
  out << "Social worker utterance to classify:\nSocial Worker: " << request.target << '\n';
}

bool is_boundary(const std::string& s, std::size_t pos) {
  if (pos >= s.size()) return true;
  auto c = static_cast<unsigned char>(s[pos]);
  return !(std::isalnum(c) || c >= 0x80);
}

std::string clean_fragment(std::string_view raw) {
  auto s = text::trim(raw);
  // Leading list markers: "1.", "2)", "-", "*", "•", "#".
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) s = text::trim(std::string_view(s).substr(i + 1));
  while (!s.empty() && (s[0] == '-' || s[0] == '*' || s[0] == '#')) s = text::trim(std::string_view(s).substr(1));
  if (s.rfind("\xe2\x80\xa2", 0) == 0) s = text::trim(std::string_view(s).substr(3));
  auto strip = [](char c) { return c == '"' || c == '\'' || c == '`' || c == '.' || c == ':' || c == '*'; };
  while (!s.empty() && strip(s.front())) s.erase(s.begin());
  while (!s.empty() && strip(s.back())) s.pop_back();
  return text::trim(s);
}

// Label mentions inside free text, earliest first, longest match on overlap.
std::vector<SkillId> scan_mentions(const std::string& fragment, const domain::Taxonomy& taxonomy) {
  auto hay = text::normalize_label(fragment);
  std::vector<std::tuple<std::size_t, std::size_t, SkillId>> hits;  // pos, length, id
  for (const auto& label : taxonomy.labels()) {
    for (const auto& needle : {text::normalize_label(label.name), text::normalize_label(label.key)}) {
      for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        if ((pos == 0 || is_boundary(hay, pos - 1)) && is_boundary(hay, pos + needle.size())) {
          hits.emplace_back(pos, needle.size(), label.id);
        }
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
    return std::get<1>(a) > std::get<1>(b);
  });
  std::vector<SkillId> out;
  std::size_t covered = 0;
  for (const auto& [pos, len, id] : hits) {
    if (pos < covered) continue;
    out.push_back(id);
    covered = pos + len;
  }
  return out;
}

}  // namespace

ClassificationRequest ClassificationRequest::from_conversation(std::span<const domain::Utterance> before,
                                                               std::string target, std::size_t window) {
  ClassificationRequest r;
  auto start = before.size() > window ? before.size() - window : 0;
  r.history.assign(before.begin() + static_cast<std::ptrdiff_t>(start), before.end());
  r.target = std::move(target);
  return r;
}

ClassificationRequest ClassificationRequest::from_corpus(const corpus::TranscriptCorpus& corpus,
                                                         std::size_t index) {
  const auto& turn = corpus.turns.at(index);
  ClassificationRequest r;
  r.sample_key = turn.key();
  r.target = turn.worker_text;
  std::uint32_t order = 0;
  if (index > 0) {
    const auto& prev = corpus.turns[index - 1];
    if (prev.session_id == turn.session_id && prev.turn_index + 1 == turn.turn_index) {
      if (!prev.client_text.empty()) r.history.push_back({domain::Speaker::kClient, prev.client_text, order++});
      r.history.push_back({domain::Speaker::kWorker, prev.worker_text, order++});
    }
  }
  if (!turn.client_text.empty()) r.history.push_back({domain::Speaker::kClient, turn.client_text, order++});
  return r;
}

std::string_view ClassificationRequest::last_client_text() const {
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->speaker == domain::Speaker::kClient) return it->text;
  }
  return {};
}

std::string backend_id(const Backend& backend) {
  return std::visit(
      [](const auto& b) -> std::string {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, PromptBackend>) {
          return b.variant == PromptVariant::kSkillOnly ? "baseline" : "baseline-defex";
        } else if constexpr (std::is_same_v<T, InContextBackend>) {
          return b.retriever == RetrieverKind::kSparse ? "icl-bm25" : "icl-dense";
        } else {
          return "scores";
        }
      },
      backend);
}

Backend parse_backend(std::string_view name, std::size_t k) {
  if (name == "baseline") return PromptBackend{PromptVariant::kSkillOnly};
  if (name == "baseline-defex") return PromptBackend{PromptVariant::kSkillDefEx};
  if (name == "icl-bm25" || name == "icl-dense") {
    if (k == 0) throw Error(ErrorKind::kInvalidArgument, "in-context k must be at least 1");
    return InContextBackend{name == "icl-bm25" ? RetrieverKind::kSparse : RetrieverKind::kDense, k};
  }
  if (name == "scores") return ScoresBackend{};
  throw Error(ErrorKind::kInvalidArgument, "unknown backend: " + std::string(name));
}

Prompt build_baseline_prompt(const ClassificationRequest& request, PromptVariant variant,
                             const domain::Taxonomy& taxonomy) {
  std::ostringstream sys;
  sys << kPromptHeader << '\n' << kTask << "\n\n";
  if (variant == PromptVariant::kSkillOnly) {
    sys << "Skill list:\n";
    render_label_names(sys, taxonomy);
  } else {
    sys << "Skill list with definitions and examples:\n";
    for (const auto& skill : taxonomy.skills()) {
      sys << "\n### " << skill.name << "\nDefinition: " << skill.definition << "\nExamples:\n";
      for (const auto& ex : skill.examples) sys << "- " << ex << '\n';
    }
    sys << "\n### " << taxonomy.no_skills().name << "\nNone of the skills above applies.\n";
  }
  sys << '\n' << kAnswerFormat;

  std::ostringstream user;
  render_conversation(user, request);
  return Prompt{sys.str(), user.str()};
}

Prompt build_icl_prompt(const ClassificationRequest& request,
                        std::span<const corpus::AnnotatedTurn> demonstrations,
                        const domain::Taxonomy& taxonomy) {
  std::ostringstream sys;
  sys << kPromptHeader << '\n' << kTask << " Labeled examples from annotated sessions come first.";

  std::ostringstream user;
  for (std::size_t i = 0; i < demonstrations.size(); ++i) {
    const auto& d = demonstrations[i];
    std::vector<std::string> names;
    for (auto id : d.ground_truth) names.push_back(taxonomy.at(id).name);
    user << "Example " << (i + 1) << '\n'
         << "Client: " << d.client_text << '\n'
         << "Social Worker: " << d.worker_text << '\n'
         << "Skills: " << text::join(names, ", ") << "\n\n";
  }
  render_conversation(user, request);
  user << "\nSkill list:\n";
  render_label_names(user, taxonomy);
  user << '\n' << kAnswerFormat;
  return Prompt{sys.str(), user.str()};
}

ParsedSkills parse_skill_output(std::string_view raw, const domain::Taxonomy& taxonomy) {
  ParsedSkills out;
  domain::SkillSet seen;
  auto add = [&](SkillId id) {
    if (!seen.test(id.index())) {
      seen.set(id.index());
      out.skills.push_back(id);
    }
  };

  std::string fragment;
  auto flush = [&] {
    auto cleaned = clean_fragment(fragment);
    fragment.clear();
    if (cleaned.empty()) return;
    if (auto id = taxonomy.find(cleaned)) {
      add(*id);
      return;
    }
    auto mentions = scan_mentions(cleaned, taxonomy);
    if (mentions.empty()) {
      ++out.skipped;
      return;
    }
    for (auto id : mentions) add(id);
  };
  for (char c : raw) {
    if (c == '\n' || c == ',' || c == ';' || c == '|' || c == '[' || c == ']' || c == '{' || c == '}') {
      flush();
    } else {
      fragment += c;
    }
  }
  flush();

  if (out.skills.size() > 1) {
    std::erase_if(out.skills, [](SkillId id) { return id.is_no_skills(); });
  }
  if (out.skills.empty()) out.skills.push_back(SkillId::no_skills());
  return out;
}

ClassificationResult classify_scores(std::span<const double> row, std::span<const double> thresholds) {
  if (row.size() != thresholds.size()) {
    throw Error(ErrorKind::kLengthMismatch, "score row and threshold vector differ in length");
  }
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });

  ClassificationResult result;
  result.backend_id = "scores";
  for (auto c : order) {
    if (row[c] >= thresholds[c]) result.skills.push_back(SkillId::from_column(c));
  }
  if (result.skills.empty()) {
    result.skills.push_back(SkillId::no_skills());
    if (!order.empty()) result.top_below_threshold = SkillId::from_column(order.front());
  }
  return result;
}

Classifier::Classifier(const domain::Taxonomy& taxonomy, const llm::Gateway* gateway)
    : taxonomy_(taxonomy), gateway_(gateway) {}

void Classifier::set_pool(std::shared_ptr<const retrieval::DemonstrationPool> pool,
                          retrieval::Bm25Params bm25) {
  if (!pool || pool->empty()) throw Error(ErrorKind::kEmptyPool, "demonstration pool is empty");
  sparse_ = std::make_shared<const retrieval::SparseIndex>(retrieval::SparseIndex::build(*pool, bm25));
  pool_ = std::move(pool);
  dense_.reset();
}

void Classifier::set_dense_index(std::shared_ptr<const retrieval::EmbeddingIndex> index) {
  dense_ = std::move(index);
}

void Classifier::set_scores(std::shared_ptr<const thresholds::ConfidenceMatrix> scores) {
  scores_ = std::move(scores);
}

std::vector<corpus::AnnotatedTurn> Classifier::demonstrations(const ClassificationRequest& request,
                                                              const InContextBackend& backend) const {
  if (!pool_) throw Error(ErrorKind::kEmptyPool, "no demonstration pool configured");
  auto query = retrieval::pair_text(request.last_client_text(), request.target);
  std::vector<retrieval::ScoredEntry> ranked;
  if (backend.retriever == RetrieverKind::kSparse) {
    ranked = sparse_->retrieve_topk(query, backend.k);
  } else {
    if (gateway_ == nullptr) throw Error(ErrorKind::kInvalidArgument, "dense retrieval needs a gateway");
    std::shared_ptr<const retrieval::EmbeddingIndex> index;
    {
      std::lock_guard lock(*dense_mutex_);
      if (!dense_) {
        dense_ = std::make_shared<const retrieval::EmbeddingIndex>(
            retrieval::EmbeddingIndex::build(*pool_, *gateway_));
      }
      index = dense_;
    }
    ranked = index->dense_topk(query, backend.k, retrieval::gateway_embedder(*gateway_));
  }
  std::vector<corpus::AnnotatedTurn> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(pool_->entries[r.ordinal]);
  return out;
}

ClassificationResult Classifier::run_prompt(const Prompt& prompt, std::string id) const {
  if (gateway_ == nullptr) throw Error(ErrorKind::kInvalidArgument, "prompt backends need a gateway");
  llm::ChatRequest req;
  req.messages = {{llm::Role::kSystem, prompt.system}, {llm::Role::kUser, prompt.user}};
  req.temperature = 0.0;
  auto start = std::chrono::steady_clock::now();
  auto response = gateway_->chat(std::move(req));
  ClassificationResult result;
  result.latency = std::chrono::steady_clock::now() - start;
  result.backend_id = std::move(id);
  result.raw_output = std::move(response.text);
  auto parsed = parse_skill_output(result.raw_output, taxonomy_);
  result.skills = std::move(parsed.skills);
  result.skipped_tokens = parsed.skipped;
  return result;
}

ClassificationResult Classifier::classify(const ClassificationRequest& request, const Backend& backend) const {
  if (text::trim(request.target).empty()) {
    throw Error(ErrorKind::kInvalidArgument, "target utterance is empty");
  }
  if (const auto* p = std::get_if<PromptBackend>(&backend)) {
    return run_prompt(build_baseline_prompt(request, p->variant, taxonomy_), backend_id(backend));
  }
  if (const auto* icl = std::get_if<InContextBackend>(&backend)) {
    if (icl->k == 0) throw Error(ErrorKind::kInvalidArgument, "in-context k must be at least 1");
    auto demos = demonstrations(request, *icl);
    auto result = run_prompt(build_icl_prompt(request, demos, taxonomy_), backend_id(backend));
    if (demos.size() < icl->k) {
      result.warnings.push_back("requested " + std::to_string(icl->k) + " demonstrations, pool has " +
                                std::to_string(demos.size()));
    }
    return result;
  }
  const auto& sb = std::get<ScoresBackend>(backend);
  const std::vector<double>* row = scores_ ? scores_->find(request.sample_key) : nullptr;
  if (row == nullptr) {
    throw Error(ErrorKind::kScoreSourceMissing, "no confidence scores for sample '" + request.sample_key + "'");
  }
  auto start = std::chrono::steady_clock::now();
  auto result = classify_scores(*row, sb.thresholds);
  result.latency = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace swtrain::classify
