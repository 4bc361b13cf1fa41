#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "swtrain/error.hpp"

namespace swtrain::llm {

enum class Role { kSystem, kUser, kAssistant };

std::string_view role_name(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
};

struct ChatRequest {
  std::string model;  // empty: ProviderConfig::chat_model
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  bool structured_output = false;  // ask for a JSON object response
  int max_tokens = 1024;

  // System message content, or "" when the first message is not a system one.
  std::string_view system() const;
};

struct ChatResponse {
  std::string text;
  int attempts = 1;
};

// Raised by providers. status is the HTTP status, 0 for transport failures.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, int status, bool retryable)
      : Error(ErrorKind::kProviderError, message, status), status_(status), retryable_(retryable) {}

  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

// Raised by the gateway once a request is abandoned; detail() is the number of
// attempts made.
class GatewayError : public Error {
 public:
  GatewayError(const std::string& message, int attempts, int last_status)
      : Error(ErrorKind::kGatewayError, message, attempts),
        attempts_(attempts),
        last_status_(last_status) {}

  int attempts() const noexcept { return attempts_; }
  int last_status() const noexcept { return last_status_; }

 private:
  int attempts_;
  int last_status_;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  // Returns the first choice's content or throws ProviderError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // One raw (not necessarily normalized) vector per text, in order.
  virtual std::vector<std::vector<double>> embed(const std::string& model,
                                                 const std::vector<std::string>& texts) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
};

struct ProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  // Name of the environment variable holding the key. The key itself is read
  // at request time and never stored in config or logs.
  std::string api_key_env = "SWITCH_LLM_API_KEY";
  std::string chat_model = "gpt-4o-mini";
  std::string embedding_model = "bge-m3";
  RetryPolicy retry;
  int max_in_flight = 8;
  std::chrono::seconds timeout{60};
  std::filesystem::path cache_dir;  // empty: in-memory embedding cache only

  // Defaults overridden by SWITCH_LLM_BASE_URL, SWITCH_LLM_MODEL and SWITCH_EMBED_MODEL.
  static ProviderConfig from_env();
  // Human-readable summary without any secret.
  std::string describe() const;
};

// Content-addressed store of normalized embeddings keyed by (model, text).
// Files live at <dir>/<sha256(model NUL text)>.vec as little-endian doubles.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path dir = {});

  std::optional<std::vector<double>> get(const std::string& model, const std::string& text) const;
  void put(const std::string& model, const std::string& text, const std::vector<double>& vec);

  static std::string key(const std::string& model, const std::string& text);

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::vector<double>> memory_;
};

// The only path from the engine to model providers: retries with exponential
// backoff, bounded concurrency and embedding caching.
class Gateway {
 public:
  Gateway(ProviderConfig config, std::shared_ptr<ChatProvider> chat,
          std::shared_ptr<EmbeddingProvider> embeddings = nullptr);

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  ChatResponse chat(ChatRequest request) const;

  // Unit-norm vectors in input order. Throws Error{kInvalidArgument} on an
  // empty list, GatewayError when the provider fails.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const;

  const ProviderConfig& config() const { return config_; }
  std::uint64_t embedding_provider_calls() const { return embed_calls_.load(); }

 private:
  template <typename Fn>
  auto with_retries(const char* what, Fn&& fn) const -> std::pair<decltype(fn()), int>;

  ProviderConfig config_;
  std::shared_ptr<ChatProvider> chat_;
  std::shared_ptr<EmbeddingProvider> embeddings_;
  mutable EmbeddingCache cache_;
  mutable std::counting_semaphore<1024> in_flight_;
  mutable std::atomic<std::uint64_t> embed_calls_{0};
};

std::vector<double> normalize(std::vector<double> v);

}  // namespace swtrain::llm
