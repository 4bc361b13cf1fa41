#include "swtrain/gateway.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "swtrain/text.hpp"

namespace swtrain::llm {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

std::string_view ChatRequest::system() const {
  if (!messages.empty() && messages.front().role == Role::kSystem) return messages.front().content;
  return {};
}

namespace {

std::string env_or(const char* name, std::string fallback) {
  if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return v;
  return fallback;
}

}  // namespace

ProviderConfig ProviderConfig::from_env() {
  ProviderConfig c;
  c.base_url = env_or("SWITCH_LLM_BASE_URL", c.base_url);
  c.chat_model = env_or("SWITCH_LLM_MODEL", c.chat_model);
  c.embedding_model = env_or("SWITCH_EMBED_MODEL", c.embedding_model);
  return c;
}

std::string ProviderConfig::describe() const {
  std::ostringstream out;
  out << "base_url=" << base_url << " chat_model=" << chat_model
      << " embedding_model=" << embedding_model << " key_env=" << api_key_env
      << " max_attempts=" << retry.max_attempts << " max_in_flight=" << max_in_flight;
  return out.str();
}

std::vector<double> normalize(std::vector<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorKind::kDomainError, "cannot normalize a zero or non-finite vector");
  }
  for (double& x : v) x /= norm;
  return v;
}

// ---------------------------------------------------------------------------
// EmbeddingCache

static_assert(std::endian::native == std::endian::little, "cache files assume little-endian");

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string EmbeddingCache::key(const std::string& model, const std::string& text) {
  std::string material = model;
  material.push_back('\0');
  material += text;
  return text::sha256_hex(material);
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& model,
                                                       const std::string& text) const {
  auto k = key(model, text);
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(k); it != memory_.end()) return it->second;
  if (dir_.empty()) return std::nullopt;

  auto path = dir_ / (k + ".vec");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint64_t dim = 0;
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  if (!in || dim == 0 || dim > (1u << 20)) return std::nullopt;
  std::vector<double> v(dim);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  if (!in) return std::nullopt;
  memory_.emplace(k, v);
  return v;
}

void EmbeddingCache::put(const std::string& model, const std::string& text,
                         const std::vector<double>& vec) {
  auto k = key(model, text);
  std::lock_guard lock(mutex_);
  memory_[k] = vec;
  if (dir_.empty()) return;
  auto path = dir_ / (k + ".vec");
  auto tmp = dir_ / (k + ".vec.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write embedding cache " + tmp.string());
    std::uint64_t dim = vec.size();
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(vec.data()),
              static_cast<std::streamsize>(vec.size() * sizeof(double)));
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(ProviderConfig config, std::shared_ptr<ChatProvider> chat,
                 std::shared_ptr<EmbeddingProvider> embeddings)
    : config_(std::move(config)),
      chat_(std::move(chat)),
      embeddings_(std::move(embeddings)),
      cache_(config_.cache_dir),
      in_flight_(std::clamp(config_.max_in_flight, 1, 1024)) {
  if (config_.retry.max_attempts < 1) {
    throw Error(ErrorKind::kInvalidArgument, "retry.max_attempts must be >= 1");
  }
}

template <typename Fn>
auto Gateway::with_retries(const char* what, Fn&& fn) const -> std::pair<decltype(fn()), int> {
  auto backoff = config_.retry.initial_backoff;
  int last_status = 0;
  std::string last_message;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    try {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      return {fn(), attempt};
    } catch (const ProviderError& e) {
      last_status = e.status();
      last_message = e.what();
      if (!e.retryable()) {
        throw GatewayError(std::string(what) + " failed: " + last_message, attempt, last_status);
      }
    }
    if (attempt < config_.retry.max_attempts && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      auto next = std::chrono::duration<double, std::milli>(backoff) * config_.retry.multiplier;
      backoff = std::min(std::chrono::duration_cast<std::chrono::milliseconds>(next),
                         config_.retry.max_backoff);
    }
  }
  throw GatewayError(std::string(what) + " failed after " +
                         std::to_string(config_.retry.max_attempts) + " attempts: " + last_message,
                     config_.retry.max_attempts, last_status);
}

ChatResponse Gateway::chat(ChatRequest request) const {
  if (request.messages.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "chat request needs at least one message");
  }
  if (!chat_) throw Error(ErrorKind::kInvalidArgument, "no chat provider configured");
  if (request.model.empty()) request.model = config_.chat_model;
  auto [text, attempts] = with_retries("chat", [&] { return chat_->complete(request); });
  return ChatResponse{std::move(text), attempts};
}

std::vector<std::vector<double>> Gateway::embed(const std::vector<std::string>& texts) const {
  if (texts.empty()) throw Error(ErrorKind::kInvalidArgument, "embed needs at least one text");
  const auto& model = config_.embedding_model;

  std::vector<std::vector<double>> out(texts.size());
  std::vector<std::string> missing;
  std::vector<std::size_t> missing_at;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (auto hit = cache_.get(model, texts[i])) {
      out[i] = std::move(*hit);
    } else {
      missing.push_back(texts[i]);
      missing_at.push_back(i);
    }
  }
  if (missing.empty()) return out;
  if (!embeddings_) throw Error(ErrorKind::kInvalidArgument, "no embedding provider configured");

  embed_calls_.fetch_add(1);
  auto [raw, attempts] = with_retries("embed", [&] { return embeddings_->embed(model, missing); });
  if (raw.size() != missing.size()) {
    throw GatewayError("embedding provider returned " + std::to_string(raw.size()) +
                           " vectors for " + std::to_string(missing.size()) + " texts",
                       attempts, 200);
  }
  for (std::size_t j = 0; j < raw.size(); ++j) {
    auto unit = normalize(std::move(raw[j]));
    cache_.put(model, missing[j], unit);
    out[missing_at[j]] = std::move(unit);
  }
  return out;
}

}  // namespace swtrain::llm
