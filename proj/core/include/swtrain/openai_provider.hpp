#pragma once

#include <memory>
#include <string>
#include <vector>

#include "swtrain/gateway.hpp"

namespace swtrain::llm {

// Chat-completions and embeddings over the OpenAI-compatible HTTP wire format.
class OpenAiProvider : public ChatProvider, public EmbeddingProvider {
 public:
  explicit OpenAiProvider(ProviderConfig config);
  ~OpenAiProvider() override;

  std::string complete(const ChatRequest& request) override;
  std::vector<std::vector<double>> embed(const std::string& model,
                                         const std::vector<std::string>& texts) override;

  // Request bodies as sent on the wire; exposed for tests.
  static std::string chat_body(const ChatRequest& request);
  static std::string embeddings_body(const std::string& model, const std::vector<std::string>& texts);
  static std::string parse_chat_response(const std::string& body);
  static std::vector<std::vector<double>> parse_embeddings_response(const std::string& body);

 private:
  std::string post(const std::string& path, const std::string& body);

  ProviderConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace swtrain::llm
