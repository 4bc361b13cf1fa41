#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "swtrain/classifier.hpp"
#include "swtrain/config.hpp"
#include "swtrain/corpus.hpp"
#include "swtrain/domain.hpp"
#include "swtrain/error.hpp"
#include "swtrain/http_api.hpp"
#include "swtrain/io.hpp"
#include "swtrain/metrics.hpp"
#include "swtrain/mock_provider.hpp"
#include "swtrain/session.hpp"
#include "swtrain/simulator.hpp"
#include "swtrain/thresholds.hpp"

namespace swtrain::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::string data_dir;
  std::string mock_script;
};

config::AppConfig load_config(const Globals& g) {
  auto cfg = g.config_path.empty() ? config::AppConfig{} : config::AppConfig::load(g.config_path);
  if (!g.data_dir.empty()) cfg.data_dir = g.data_dir;
  if (!g.mock_script.empty()) cfg.mock_script = g.mock_script;
  return cfg;
}

corpus::TranscriptCorpus load_corpus(const fs::path& path, const domain::Taxonomy& taxonomy,
                                     std::ostream& err) {
  auto result = corpus::ingest(path, taxonomy);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  return std::move(result.corpus);
}

// Prints each distinct warning once, in first-seen order.
class WarningSink {
 public:
  void add(const std::vector<std::string>& warnings) {
    std::lock_guard lock(mutex_);
    for (const auto& w : warnings) {
      if (seen_.insert(w).second) order_.push_back(w);
    }
  }
  void flush(std::ostream& err) const {
    for (const auto& w : order_) err << "warning: " << w << '\n';
  }

 private:
  std::mutex mutex_;
  std::set<std::string> seen_;
  std::vector<std::string> order_;
};

// ---- ingest / split / dist ----

struct IngestArgs {
  std::string input;
  std::string out;
};

int cmd_ingest(const IngestArgs& a, const config::AppConfig& cfg, std::ostream& out, std::ostream& err) {
  auto data = domain::DomainData::load(cfg.data_dir);
  auto result = corpus::ingest(a.input, data.taxonomy);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  out << "turns: " << result.corpus.size() << '\n'
      << "dropped others-only rows: " << result.dropped_others_rows << '\n'
      << "stripped others labels: " << result.stripped_others_labels << '\n';
  if (!a.out.empty()) {
    corpus::export_file(result.corpus, data.taxonomy, a.out);
    out << "wrote " << a.out << '\n';
  }
  return 0;
}

struct SplitArgs {
  std::string input;
  double train = 0.8;
  double validation = 0.0;
  std::uint64_t seed = 0;
  bool by_session = false;
  std::string out_dir = ".";
};

int cmd_split(const SplitArgs& a, const config::AppConfig& cfg, std::ostream& out, std::ostream& err) {
  auto data = domain::DomainData::load(cfg.data_dir);
  auto corpus = load_corpus(a.input, data.taxonomy, err);
  corpus::SplitSpec spec;
  spec.train_fraction = a.train;
  spec.validation_fraction_of_train = a.validation;
  spec.seed = a.seed;
  spec.mode = a.by_session ? corpus::SplitMode::kBySession : corpus::SplitMode::kByTurn;

  auto parts = corpus::split(corpus, spec);
  fs::create_directories(a.out_dir);
  const fs::path dir = a.out_dir;
  if (a.validation > 0.0) {
    auto carved = corpus::carve_validation(parts.first, spec);
    corpus::export_file(carved.first, data.taxonomy, dir / "train.jsonl");
    corpus::export_file(carved.second, data.taxonomy, dir / "val.jsonl");
    out << "train: " << carved.first.size() << "\nval: " << carved.second.size() << '\n';
  } else {
    corpus::export_file(parts.first, data.taxonomy, dir / "train.jsonl");
    out << "train: " << parts.first.size() << '\n';
  }
  corpus::export_file(parts.second, data.taxonomy, dir / "test.jsonl");
  out << "test: " << parts.second.size() << '\n';
  return 0;
}

struct DistArgs {
  std::string input;
  bool json = false;
};

int cmd_dist(const DistArgs& a, const config::AppConfig& cfg, std::ostream& out, std::ostream& err) {
  auto data = domain::DomainData::load(cfg.data_dir);
  auto report = corpus::distribution_report(load_corpus(a.input, data.taxonomy, err));
  out << (a.json ? corpus::distribution_json(report, data.taxonomy) + "\n"
                 : corpus::render_distribution(report, data.taxonomy));
  return 0;
}

// ---- classify ----

struct ClassifyArgs {
  std::string backend;
  std::string input;
  std::string output;
  std::string pool;
  std::string scores;
  std::string thresholds;
  std::optional<std::size_t> k;
};

std::vector<double> resolve_thresholds(const std::string& path, const config::AppConfig& cfg,
                                       const domain::Taxonomy& taxonomy) {
  fs::path p = path.empty() ? cfg.thresholds_file : fs::path(path);
  if (p.empty()) throw Error(ErrorKind::kInvalidArgument, "the scores backend needs --thresholds");
  return thresholds::ThresholdVector::load(p, taxonomy).values;
}

int cmd_classify(const ClassifyArgs& a, const config::AppConfig& cfg, std::ostream& out, std::ostream& err) {
  auto data = domain::DomainData::load(cfg.data_dir);
  auto test = load_corpus(a.input, data.taxonomy, err);
  auto backend = classify::parse_backend(a.backend, a.k.value_or(cfg.icl_k));

  std::unique_ptr<llm::Gateway> gateway;
  if (!std::holds_alternative<classify::ScoresBackend>(backend)) gateway = config::make_gateway(cfg);
  classify::Classifier classifier(data.taxonomy, gateway.get());

  if (std::holds_alternative<classify::InContextBackend>(backend)) {
    if (a.pool.empty()) throw Error(ErrorKind::kInvalidArgument, "in-context backends need --pool <train corpus>");
    auto pool = std::make_shared<retrieval::DemonstrationPool>(
        retrieval::DemonstrationPool::from_corpus(load_corpus(a.pool, data.taxonomy, err)));
    classifier.set_pool(pool, cfg.bm25);
  }
  if (auto* sb = std::get_if<classify::ScoresBackend>(&backend)) {
    if (a.scores.empty()) throw Error(ErrorKind::kInvalidArgument, "the scores backend needs --scores");
    classifier.set_scores(std::make_shared<thresholds::ConfidenceMatrix>(
        thresholds::ConfidenceMatrix::load(a.scores, data.taxonomy)));
    sb->thresholds = resolve_thresholds(a.thresholds, cfg, data.taxonomy);
  }

  const std::size_t n = test.size();
  std::vector<eval::PredictionRecord> records(n);
  WarningSink warnings;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        auto request = classify::ClassificationRequest::from_corpus(test, i);
        auto result = classifier.classify(request, backend);
        warnings.add(result.warnings);
        auto& r = records[i];
        r.key = test.turns[i].key();
        r.predicted = domain::to_set(result.skills);
        r.ground_truth = test.turns[i].truth_set();
        r.ranked = std::move(result.skills);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(cfg.llm.max_in_flight), 1,
                                                      std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  warnings.flush(err);
  if (failure) std::rethrow_exception(failure);

  io::write_file_atomic(a.output, eval::format_predictions(records, data.taxonomy));
  out << "classified " << n << " turns with " << classify::backend_id(backend) << " -> " << a.output << '\n';
  return 0;
}

// ---- thresholds ----

struct ThresholdArgs {
  std::string strategy;
  std::string scores;
  std::string output;
  std::string objective = "micro_f1";
  std::uint64_t seed = 0;
};

int cmd_thresholds(const ThresholdArgs& a, const config::AppConfig& cfg, std::ostream& out, std::ostream&) {
  auto data = domain::DomainData::load(cfg.data_dir);
  auto matrix = thresholds::ConfidenceMatrix::load(a.scores, data.taxonomy);
  auto objective = thresholds::parse_objective(a.objective);
  thresholds::ThresholdVector result;
  if (a.strategy == "static") {
    result = thresholds::optimize_static(matrix, objective);
  } else if (a.strategy == "independent") {
    result = thresholds::optimize_independent(matrix, objective);
  } else {
    result = thresholds::optimize_joint_ga(matrix, objective, cfg.ga, a.seed);
  }
  result.save(a.output, data.taxonomy);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", result.objective_value);
  out << result.strategy << ' ' << thresholds::objective_name(objective) << ' ' << buf << " -> " << a.output
      << '\n';
  return 0;
}

// ---- metrics ----

struct MetricsArgs {
  std::vector<std::string> preds;
  std::vector<std::string> names;
  std::string json;
};

int cmd_metrics(const MetricsArgs& a, const config::AppConfig& cfg, std::ostream& out, std::ostream&) {
  if (!a.names.empty() && a.names.size() != a.preds.size()) {
    throw Error(ErrorKind::kInvalidArgument, "--name must be given once per --preds");
  }
  auto data = domain::DomainData::load(cfg.data_dir);
  std::vector<eval::NamedReport> reports;
  for (std::size_t i = 0; i < a.preds.size(); ++i) {
    auto records = eval::read_predictions(a.preds[i], data.taxonomy);
    auto name = a.names.empty() ? fs::path(a.preds[i]).stem().string() : a.names[i];
    reports.emplace_back(std::move(name), eval::compute_report(records));
  }
  out << eval::render_summary_table(reports) << '\n' << eval::render_per_skill_table(reports, data.taxonomy);
  if (!a.json.empty()) io::write_file_atomic(a.json, eval::report_json(reports, data.taxonomy) + "\n");
  return 0;
}

// ---- serve ----

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) { g_stop_requested = true; }

struct ServeArgs {
  std::optional<int> port;
  std::string host;
  std::string store;
  std::string pool;
  std::string scores;
  std::string thresholds;
};

std::shared_ptr<classify::Classifier> make_session_classifier(const session::ServiceConfig& service,
                                                              const ServeArgs& a,
                                                              const config::AppConfig& cfg,
                                                              const domain::DomainData& data,
                                                              const llm::Gateway& gateway, std::ostream& err) {
  auto classifier = std::make_shared<classify::Classifier>(data.taxonomy, &gateway);
  if (std::holds_alternative<classify::InContextBackend>(service.backend)) {
    if (a.pool.empty()) throw Error(ErrorKind::kInvalidArgument, "in-context backends need --pool <train corpus>");
    classifier->set_pool(std::make_shared<retrieval::DemonstrationPool>(retrieval::DemonstrationPool::from_corpus(
                             load_corpus(a.pool, data.taxonomy, err))),
                         cfg.bm25);
  }
  if (std::holds_alternative<classify::ScoresBackend>(service.backend)) {
    throw Error(ErrorKind::kInvalidArgument, "the scores backend needs precomputed rows and cannot serve live turns");
  }
  return classifier;
}

int cmd_serve(const ServeArgs& a, config::AppConfig cfg, std::ostream& out, std::ostream& err) {
  if (a.port) cfg.port = *a.port;
  if (!a.host.empty()) cfg.host = a.host;
  if (!a.store.empty()) cfg.store_dir = a.store;

  auto data = domain::DomainData::load(cfg.data_dir);
  auto gateway = config::make_gateway(cfg);
  auto service_config = cfg.service_config();
  auto classifier = make_session_classifier(service_config, a, cfg, data, *gateway, err);
  session::SessionService service(data, sim::ProfileRegistry::load(cfg.profiles_dir), *gateway, classifier,
                                  service_config);
  auto restored = service.load_persisted();

  http::ApiServer server(service, cfg.api_config());
  int port = server.bind(cfg.host, cfg.port);
  out << "restored " << restored << " sessions\n"
      << "listening on http://" << cfg.host << ':' << port << " (" << gateway->config().describe() << ")\n"
      << std::flush;

  g_stop_requested = false;
  std::signal(SIGINT, on_stop_signal);
  std::signal(SIGTERM, on_stop_signal);
  std::thread watcher([&server] {
    while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    server.stop();
  });
  server.listen();
  g_stop_requested = true;
  watcher.join();
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  std::string profile;
  std::string script;
  std::string events_out;
};

// Script: {"messages": ["trainee text", ...], "provider": {<mock provider script>}}.
// Without "provider" the configured gateway is used.
int cmd_simulate(const SimulateArgs& a, const config::AppConfig& cfg, std::ostream& out, std::ostream& err) {
  nlohmann::json script;
  try {
    script = nlohmann::json::parse(io::read_file(a.script));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, a.script + ": " + e.what());
  }
  if (!script.is_object() || !script.contains("messages") || !script.at("messages").is_array()) {
    throw Error(ErrorKind::kParseError, a.script + ": expected an object with a \"messages\" array");
  }

  auto data = domain::DomainData::load(cfg.data_dir);
  std::unique_ptr<llm::Gateway> gateway;
  if (script.contains("provider")) {
    auto mock = llm::MockProvider::from_json(script.at("provider"));
    auto provider_config = cfg.llm;
    provider_config.retry.initial_backoff = std::chrono::milliseconds(0);
    gateway = std::make_unique<llm::Gateway>(provider_config, mock, mock);
  } else {
    gateway = config::make_gateway(cfg);
  }

  auto service_config = cfg.service_config();
  service_config.store_dir.clear();
  auto classifier = make_session_classifier(service_config, {}, cfg, data, *gateway, err);
  session::SessionService service(data, sim::ProfileRegistry::load(cfg.profiles_dir), *gateway, classifier,
                                  service_config, [] { return std::string("1970-01-01T00:00:00Z"); },
                                  session::sequential_ids("sim"));

  auto session = service.create_session(a.profile);
  for (const auto& m : script.at("messages")) {
    auto result = service.post_message(session->id, m.get<std::string>());
    for (const auto& w : result.warnings) err << "warning: turn " << result.turn << ": " << w << '\n';
    out << session::turn_result_json(result, data.taxonomy, true).dump() << '\n';
  }
  out << nlohmann::ordered_json{{"feedback", service.feedback(session->id).to_json(data.taxonomy)}}.dump() << '\n';

  if (!a.events_out.empty()) {
    std::string log;
    for (const auto& e : service.events(session->id)) log += e.dump() + "\n";
    io::write_file_atomic(a.events_out, log);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Social-work skills training engine: corpus tools, classification, thresholds, metrics, sessions",
               "swtrain"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--data-dir", g.data_dir, "Directory overriding bundled data files");
  app.add_option("--mock", g.mock_script, "Mock provider script (replaces the HTTP provider)")
      ->check(CLI::ExistingFile);

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Validate a JSONL corpus and optionally write its canonical form");
  ingest->add_option("file", ingest_args.input)->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_args.out, "Canonical export path");

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Seeded train/test split with floor sizing");
  split->add_option("corpus", split_args.input)->required()->check(CLI::ExistingFile);
  split->add_option("--train", split_args.train, "Train fraction")->check(CLI::Range(0.0, 1.0));
  split->add_option("--val", split_args.validation, "Validation fraction carved from train")
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", split_args.seed);
  split->add_flag("--by-session", split_args.by_session, "Keep sessions whole");
  split->add_option("--out-dir", split_args.out_dir);

  DistArgs dist_args;
  auto* dist = app.add_subcommand("dist", "Skill distribution report");
  dist->add_option("corpus", dist_args.input)->required()->check(CLI::ExistingFile);
  dist->add_flag("--json", dist_args.json);

  ClassifyArgs classify_args;
  auto* classify_cmd = app.add_subcommand("classify", "Classify every turn of a corpus");
  classify_cmd->add_option("--backend", classify_args.backend)
      ->required()
      ->check(CLI::IsMember({"baseline", "baseline-defex", "icl-bm25", "icl-dense", "scores"}));
  classify_cmd->add_option("--in", classify_args.input)->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--out", classify_args.output)->required();
  classify_cmd->add_option("--pool", classify_args.pool, "Training corpus for in-context demonstrations")
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--scores", classify_args.scores, "Confidence matrix for the scores backend")
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--thresholds", classify_args.thresholds, "Threshold file for the scores backend")
      ->check(CLI::ExistingFile);
  classify_cmd->add_option("--k", classify_args.k, "Demonstrations per prompt")->check(CLI::PositiveNumber);

  ThresholdArgs threshold_args;
  auto* thresholds_cmd = app.add_subcommand("thresholds", "Optimize per-skill decision thresholds");
  thresholds_cmd->add_option("--strategy", threshold_args.strategy)
      ->required()
      ->check(CLI::IsMember({"static", "independent", "joint"}));
  thresholds_cmd->add_option("--scores", threshold_args.scores)->required()->check(CLI::ExistingFile);
  thresholds_cmd->add_option("--out", threshold_args.output)->required();
  thresholds_cmd->add_option("--objective", threshold_args.objective)
      ->check(CLI::IsMember({"micro_f1", "macro_f1"}));
  thresholds_cmd->add_option("--seed", threshold_args.seed, "Seed for the joint search");

  MetricsArgs metrics_args;
  auto* metrics = app.add_subcommand("metrics", "Summary and per-skill metric tables");
  metrics->add_option("--preds", metrics_args.preds, "Prediction file (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("--name", metrics_args.names, "Method name per --preds");
  metrics->add_option("--json", metrics_args.json, "Also write the report as JSON");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the session HTTP API");
  serve->add_option("--port", serve_args.port);
  serve->add_option("--host", serve_args.host);
  serve->add_option("--store", serve_args.store, "Session store directory");
  serve->add_option("--pool", serve_args.pool, "Training corpus for in-context demonstrations")
      ->check(CLI::ExistingFile);

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand("simulate", "Run a scripted session");
  simulate->add_option("--profile", simulate_args.profile)->required();
  simulate->add_option("--script", simulate_args.script)->required()->check(CLI::ExistingFile);
  simulate->add_option("--events-out", simulate_args.events_out, "Write the event log here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    auto cfg = load_config(g);
    if (ingest->parsed()) return cmd_ingest(ingest_args, cfg, out, err);
    if (split->parsed()) return cmd_split(split_args, cfg, out, err);
    if (dist->parsed()) return cmd_dist(dist_args, cfg, out, err);
    if (classify_cmd->parsed()) return cmd_classify(classify_args, cfg, out, err);
    if (thresholds_cmd->parsed()) return cmd_thresholds(threshold_args, cfg, out, err);
    if (metrics->parsed()) return cmd_metrics(metrics_args, cfg, out, err);
    if (serve->parsed()) return cmd_serve(serve_args, cfg, out, err);
    if (simulate->parsed()) return cmd_simulate(simulate_args, cfg, out, err);
  } catch (const Error& e) {
    err << "error [" << error_kind_name(e.kind()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace swtrain::cli
