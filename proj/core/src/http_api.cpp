#include "swtrain/http_api.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace swtrain::http {

using ordered_json = nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
  send_json(res, status, ordered_json{{"error", kind}, {"message", message}});
}

std::string required_field(const httplib::Request& req, const char* field) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::kInvalidArgument, "request body is not valid JSON");
  }
  if (!body.is_object() || !body.contains(field) || !body.at(field).is_string()) {
    throw Error(ErrorKind::kInvalidArgument, std::string("request body needs a string \"") + field + "\"");
  }
  return body.at(field).get<std::string>();
}

}  // namespace

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnknownSession:
    case ErrorKind::kUnknownProfile: return 404;
    case ErrorKind::kSessionBusy: return 409;
    case ErrorKind::kTurnFailed: return 502;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kParseError: return 400;
    default: return 500;
  }
}

struct ApiServer::Impl {
  session::SessionService& service;
  ApiConfig config;
  httplib::Server server;

  Impl(session::SessionService& s, ApiConfig c) : service(s), config(std::move(c)) {}

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, status_for(e.kind()), error_kind_name(e.kind()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    const auto& taxonomy = service.data().taxonomy;
    const bool expose = config.expose_stage_to_trainee;

    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      if (req.method == "OPTIONS") {
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.status = 204;
        return httplib::Server::HandlerResponse::Handled;
      }
      if (!config.bearer_token.empty() &&
          req.get_header_value("Authorization") != "Bearer " + config.bearer_token) {
        send_error(res, 401, "unauthorized", "missing or wrong bearer token");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server.Get("/profiles", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto arr = ordered_json::array();
      for (const auto& [id, p] : service.profiles().all()) {
        arr.push_back({{"profile_id", id}, {"name", p.profile.name}, {"background", p.profile.background}});
      }
      send_json(res, 200, arr);
    }));

    server.Post("/sessions", guarded([this, expose](const httplib::Request& req, httplib::Response& res) {
      auto session = service.create_session(required_field(req, "profile_id"));
      send_json(res, 201, session::session_view_json(*session, expose));
    }));

    server.Post(R"(/sessions/([^/]+)/messages)",
                guarded([this, &taxonomy, expose](const httplib::Request& req, httplib::Response& res) {
                  auto result = service.post_message(req.matches[1], required_field(req, "text"));
                  send_json(res, 200, session::turn_result_json(result, taxonomy, expose));
                }));

    server.Get(R"(/sessions/([^/]+)/feedback)",
               guarded([this, &taxonomy](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, service.feedback(req.matches[1]).to_json(taxonomy));
               }));

    server.Get(R"(/sessions/([^/]+)/instructor)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, service.instructor_view(req.matches[1]));
               }));

    server.Get(R"(/sessions/([^/]+))", guarded([this, expose](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, session::session_view_json(*service.get(req.matches[1]), expose));
               }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, "not_found", "no such route");
    });
  }
};

ApiServer::ApiServer(session::SessionService& service, ApiConfig config)
    : impl_(std::make_unique<Impl>(service, std::move(config))) {
  impl_->routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void ApiServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace swtrain::http
