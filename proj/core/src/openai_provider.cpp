#include "swtrain/openai_provider.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>

namespace swtrain::llm {

using json = nlohmann::json;

OpenAiProvider::OpenAiProvider(ProviderConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kInvalidArgument, "base URL needs a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

OpenAiProvider::~OpenAiProvider() = default;

std::string OpenAiProvider::chat_body(const ChatRequest& request) {
  json body;
  body["model"] = request.model;
  auto messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (request.structured_output) body["response_format"] = {{"type", "json_object"}};
  return body.dump();
}

std::string OpenAiProvider::embeddings_body(const std::string& model,
                                            const std::vector<std::string>& texts) {
  return json{{"model", model}, {"input", texts}}.dump();
}

std::string OpenAiProvider::parse_chat_response(const std::string& body) {
  try {
    auto j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed chat response: ") + e.what(), 200, false);
  }
}

std::vector<std::vector<double>> OpenAiProvider::parse_embeddings_response(const std::string& body) {
  try {
    auto j = json::parse(body);
    std::vector<std::pair<long, std::vector<double>>> rows;
    for (const auto& d : j.at("data")) {
      rows.emplace_back(d.value("index", static_cast<long>(rows.size())),
                        d.at("embedding").get<std::vector<double>>());
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (auto& r : rows) out.push_back(std::move(r.second));
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed embeddings response: ") + e.what(), 200, false);
  }
}

std::string OpenAiProvider::post(const std::string& path, const std::string& body) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(path_prefix_ + path, headers, body, "application/json");
  if (!res) {
    throw ProviderError("transport error: " + httplib::to_string(res.error()), 0, true);
  }
  if (res->status == 200) return res->body;
  bool retryable = res->status == 429 || res->status >= 500;
  throw ProviderError("HTTP " + std::to_string(res->status) + " from " + path, res->status,
                      retryable);
}

std::string OpenAiProvider::complete(const ChatRequest& request) {
  return parse_chat_response(post("/chat/completions", chat_body(request)));
}

std::vector<std::vector<double>> OpenAiProvider::embed(const std::string& model,
                                                       const std::vector<std::string>& texts) {
  return parse_embeddings_response(post("/embeddings", embeddings_body(model, texts)));
}

}  // namespace swtrain::llm
