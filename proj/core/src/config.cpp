#include "swtrain/config.hpp"

#include <cstdlib>
#include <set>

#include "swtrain/error.hpp"
#include "swtrain/io.hpp"
#include "swtrain/mock_provider.hpp"
#include "swtrain/openai_provider.hpp"

namespace swtrain::config {

namespace {

// Reads keys from one config section, rejecting any it was not asked about.
class Section {
 public:
  Section(const nlohmann::json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    node_ = &root.at(name_);
    if (!node_->is_object()) throw Error(ErrorKind::kParseError, "config section \"" + name_ + "\" is not an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParseError, "config " + name_ + "." + key + ": " + e.what());
    }
  }

  void read_path(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    read(key, s);
    out = s;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, _] : node_->items()) {
      if (!seen_.count(key)) throw Error(ErrorKind::kParseError, "unknown config key " + name_ + "." + key);
    }
  }

 private:
  std::string name_;
  const nlohmann::json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

AppConfig AppConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kParseError, "config must be a JSON object");
  static const std::set<std::string> kSections = {"data", "llm", "retrieval", "classifier", "mi",
                                                  "simulator", "ga", "session", "server"};
  for (const auto& [key, _] : j.items()) {
    if (!kSections.count(key)) throw Error(ErrorKind::kParseError, "unknown config section " + key);
  }

  AppConfig c;
  {
    Section s(j, "data");
    s.read_path("dir", c.data_dir);
    s.read_path("profiles_dir", c.profiles_dir);
    s.finish();
  }
  {
    Section s(j, "llm");
    auto& l = c.llm;
    s.read("base_url", l.base_url);
    s.read("api_key_env", l.api_key_env);
    s.read("chat_model", l.chat_model);
    s.read("embedding_model", l.embedding_model);
    s.read("max_in_flight", l.max_in_flight);
    s.read("max_attempts", l.retry.max_attempts);
    long long backoff_ms = l.retry.initial_backoff.count();
    s.read("initial_backoff_ms", backoff_ms);
    l.retry.initial_backoff = std::chrono::milliseconds(backoff_ms);
    long long timeout_s = l.timeout.count();
    s.read("timeout_s", timeout_s);
    l.timeout = std::chrono::seconds(timeout_s);
    s.read_path("cache_dir", l.cache_dir);
    s.read_path("mock_script", c.mock_script);
    s.finish();
  }
  {
    Section s(j, "retrieval");
    s.read("k1", c.bm25.k1);
    s.read("b", c.bm25.b);
    s.read("k", c.icl_k);
    s.finish();
  }
  {
    Section s(j, "classifier");
    s.read("backend", c.classifier_backend);
    s.read_path("thresholds_file", c.thresholds_file);
    s.finish();
  }
  {
    Section s(j, "mi");
    s.read("log_base", c.mi.log_base);
    s.read("contemplation_threshold", c.mi.contemplation_threshold);
    s.read("preparation_threshold", c.mi.preparation_threshold);
    s.read("gate_temperature", c.mi.gate_temperature);
    s.read("editor_temperature", c.mi.editor_temperature);
    s.finish();
  }
  {
    Section s(j, "simulator");
    s.read("temperature", c.sim.temperature);
    s.read("max_tokens", c.sim.max_tokens);
    s.finish();
  }
  {
    Section s(j, "ga");
    s.read("population", c.ga.population);
    s.read("generations", c.ga.generations);
    s.read("tournament_size", c.ga.tournament_size);
    s.read("crossover_rate", c.ga.crossover_rate);
    s.read("mutation_rate", c.ga.mutation_rate);
    s.read("mutation_sigma", c.ga.mutation_sigma);
    s.read("elitism", c.ga.elitism);
    s.finish();
  }
  {
    Section s(j, "session");
    s.read_path("store_dir", c.store_dir);
    s.read("snapshot_every", c.snapshot_every);
    s.read("expose_stage_to_trainee", c.expose_stage_to_trainee);
    s.read("bearer_token_env", c.bearer_token_env);
    s.finish();
  }
  {
    Section s(j, "server");
    s.read("host", c.host);
    s.read("port", c.port);
    s.finish();
  }

  c.ga.validate();
  if (c.icl_k == 0) throw Error(ErrorKind::kParseError, "retrieval.k must be positive");
  if (c.llm.max_in_flight < 1) throw Error(ErrorKind::kParseError, "llm.max_in_flight must be positive");
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
  return from_json(j);
}

session::ServiceConfig AppConfig::service_config() const {
  session::ServiceConfig s;
  s.backend = classify::parse_backend(classifier_backend, icl_k);
  s.mi = mi;
  s.sim = sim;
  s.store_dir = store_dir;
  s.snapshot_every = snapshot_every;
  return s;
}

http::ApiConfig AppConfig::api_config() const {
  http::ApiConfig a;
  a.expose_stage_to_trainee = expose_stage_to_trainee;
  if (!bearer_token_env.empty()) {
    if (const char* token = std::getenv(bearer_token_env.c_str())) a.bearer_token = token;
  }
  return a;
}

std::unique_ptr<llm::Gateway> make_gateway(const AppConfig& config) {
  if (!config.mock_script.empty()) {
    nlohmann::json script;
    try {
      script = nlohmann::json::parse(io::read_file(config.mock_script));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParseError, config.mock_script.string() + ": " + e.what());
    }
    auto mock = llm::MockProvider::from_json(script);
    return std::make_unique<llm::Gateway>(config.llm, mock, mock);
  }
  auto provider = std::make_shared<llm::OpenAiProvider>(config.llm);
  return std::make_unique<llm::Gateway>(config.llm, provider, provider);
}

}  // namespace swtrain::config
