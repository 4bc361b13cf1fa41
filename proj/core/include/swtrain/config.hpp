#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <string>

#include "swtrain/gateway.hpp"
#include "swtrain/http_api.hpp"
#include "swtrain/mi_engine.hpp"
#include "swtrain/retrieval.hpp"
#include "swtrain/session.hpp"
#include "swtrain/thresholds.hpp"

namespace swtrain::config {

// Application settings. Every key is optional; missing keys keep the
// defaults below. Secrets are never read from here, only the name of the
// environment variable that holds them.
struct AppConfig {
  std::filesystem::path data_dir;  // overrides for embedded data files
  std::filesystem::path profiles_dir;

  llm::ProviderConfig llm = llm::ProviderConfig::from_env();
  std::filesystem::path mock_script;  // when set, chat and embeddings come from a MockProvider

  retrieval::Bm25Params bm25;
  std::size_t icl_k = 8;
  std::string classifier_backend = "baseline-defex";
  std::filesystem::path thresholds_file;

  mi::MiConfig mi;
  sim::SimConfig sim;
  thresholds::GaParams ga;

  std::filesystem::path store_dir;
  std::uint32_t snapshot_every = 10;
  bool expose_stage_to_trainee = false;
  std::string bearer_token_env = "SWITCH_API_TOKEN";

  std::string host = "127.0.0.1";
  int port = 8080;

  // Throws Error{kParseError} on unknown sections, unknown keys or wrong types.
  static AppConfig from_json(const nlohmann::json& j);
  static AppConfig load(const std::filesystem::path& path);

  session::ServiceConfig service_config() const;
  http::ApiConfig api_config() const;  // reads the bearer token env var
};

// Provider built from config: the mock script when given, else the
// OpenAI-compatible HTTP provider.
std::unique_ptr<llm::Gateway> make_gateway(const AppConfig& config);

}  // namespace swtrain::config
