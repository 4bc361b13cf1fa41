#include "swtrain/mock_provider.hpp"

#include "swtrain/text.hpp"

namespace swtrain::llm {

MockProvider::MockProvider(std::vector<MockRule> script, MockOptions options)
    : rules_(std::move(script)), options_(std::move(options)), hits_(rules_.size(), 0) {}

std::shared_ptr<MockProvider> MockProvider::from_json(const nlohmann::json& script) {
  std::vector<MockRule> rules;
  MockOptions options;
  try {
    options.strict = script.value("strict", false);
    if (script.contains("default")) options.default_response = script.at("default").get<std::string>();
    for (const auto& r : script.value("rules", nlohmann::json::array())) {
      MockRule rule;
      rule.contains = r.value("contains", "");
      rule.system_contains = r.value("system_contains", "");
      rule.last_contains = r.value("last_contains", "");
      if (r.contains("times")) rule.times = r.at("times").get<int>();
      rule.response = r.value("response", "");
      if (r.contains("error_status")) rule.error_status = r.at("error_status").get<int>();
      rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("mock script: ") + e.what());
  }
  auto mock = std::make_shared<MockProvider>(std::move(rules), options);
  if (script.contains("embeddings")) {
    for (const auto& [text, vec] : script.at("embeddings").items()) {
      mock->set_embedding(text, vec.get<std::vector<double>>());
    }
  }
  return mock;
}

std::string MockProvider::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);

  std::string all;
  for (const auto& m : request.messages) {
    all += m.content;
    all += '\n';
  }
  auto system = request.system();
  const std::string& last = request.messages.back().content;

  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    if (rule.times && hits_[i] >= *rule.times) continue;
    if (!rule.contains.empty() && all.find(rule.contains) == std::string::npos) continue;
    if (!rule.system_contains.empty() && system.find(rule.system_contains) == std::string_view::npos) {
      continue;
    }
    if (!rule.last_contains.empty() && last.find(rule.last_contains) == std::string::npos) continue;
    ++hits_[i];
    if (rule.error_status) {
      int status = *rule.error_status;
      bool retryable = status == 0 || status == 429 || status >= 500;
      throw ProviderError("mock provider scripted failure (status " + std::to_string(status) + ")",
                          status, retryable);
    }
    return rule.response;
  }

  if (!options_.strict && options_.default_response) return *options_.default_response;
  throw Error(ErrorKind::kUnmatchedRequest, "mock provider: no rule matches request");
}

std::vector<double> hashed_bag_of_words(const std::string& input, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  for (const auto& token : text::tokenize(input)) {
    // FNV-1a
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : token) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  bool all_zero = true;
  for (double x : v) all_zero = all_zero && x == 0.0;
  if (all_zero) v[0] = 1.0;
  return v;
}

std::vector<std::vector<double>> MockProvider::embed(const std::string& /*model*/,
                                                     const std::vector<std::string>& texts) {
  std::lock_guard lock(mutex_);
  ++embed_calls_;
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (auto it = embeddings_.find(t); it != embeddings_.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(hashed_bag_of_words(t, options_.hash_embedding_dim));
    }
  }
  return out;
}

void MockProvider::set_embedding(const std::string& text, std::vector<double> vec) {
  std::lock_guard lock(mutex_);
  embeddings_[text] = std::move(vec);
}

std::size_t MockProvider::chat_calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::size_t MockProvider::embed_calls() const {
  std::lock_guard lock(mutex_);
  return embed_calls_;
}

std::size_t MockProvider::calls_with_system(const std::string& marker) const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& r : requests_) {
    if (r.system().find(marker) != std::string_view::npos) ++n;
  }
  return n;
}

std::vector<ChatRequest> MockProvider::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::vector<int> MockProvider::rule_hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

}  // namespace swtrain::llm
