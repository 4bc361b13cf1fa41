#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "swtrain/gateway.hpp"

namespace swtrain::llm {

// One scripted behavior. A rule matches when every non-empty matcher is a
// substring of the corresponding request text. Rules are tried in order; a
// rule with `times` stops matching once it has fired that many times, so a run
// of `times: 1` rules plays back sequentially.
struct MockRule {
  std::string contains;  // any message
  std::string system_contains;  // system message only
  std::string last_contains;  // final message only
  std::optional<int> times;
  std::string response;
  // When set, fire a ProviderError with this status instead (0 = transport
  // failure). 429 and 5xx are retryable.
  std::optional<int> error_status;
};

struct MockOptions {
  bool strict = false;  // unmatched requests raise UnmatchedRequest
  std::optional<std::string> default_response;  // used when not strict
  std::size_t hash_embedding_dim = 64;
};

// Deterministic chat and embedding provider for tests, demos and the offline
// acceptance runs. Embeddings come from an explicit text->vector table, falling
// back to a hashed bag-of-words vector.
class MockProvider : public ChatProvider, public EmbeddingProvider {
 public:
  explicit MockProvider(std::vector<MockRule> script, MockOptions options = {});

  // {"strict": bool, "default": "...", "rules": [{"contains": "...", "system_contains": "...",
  //   "last_contains": "...", "times": n, "response": "...", "error_status": n}],
  //  "embeddings": {"text": [..]}}
  static std::shared_ptr<MockProvider> from_json(const nlohmann::json& script);

  std::string complete(const ChatRequest& request) override;
  std::vector<std::vector<double>> embed(const std::string& model,
                                         const std::vector<std::string>& texts) override;

  void set_embedding(const std::string& text, std::vector<double> vec);

  std::size_t chat_calls() const;
  std::size_t embed_calls() const;
  // Number of chat requests whose system message contains `marker`.
  std::size_t calls_with_system(const std::string& marker) const;
  std::vector<ChatRequest> requests() const;
  // How many times each rule has fired, in script order.
  std::vector<int> rule_hits() const;

 private:
  std::vector<MockRule> rules_;
  MockOptions options_;
  std::map<std::string, std::vector<double>> embeddings_;
  mutable std::mutex mutex_;
  std::vector<int> hits_;
  std::vector<ChatRequest> requests_;
  std::size_t embed_calls_ = 0;
};

std::vector<double> hashed_bag_of_words(const std::string& text, std::size_t dim);

}  // namespace swtrain::llm
