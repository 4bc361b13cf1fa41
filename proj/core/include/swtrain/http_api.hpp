#pragma once

#include <memory>
#include <string>

#include "swtrain/error.hpp"
#include "swtrain/session.hpp"

namespace swtrain::http {

struct ApiConfig {
  std::string bearer_token;  // empty: no authentication
  bool expose_stage_to_trainee = false;
};

// Status code for an error kind: 404 unknown session/profile, 409 busy,
// 502 failed turn, 400 bad input, 500 otherwise.
int status_for(ErrorKind kind);

// JSON API over a SessionService:
//   POST /sessions {"profile_id"}            GET /profiles
//   POST /sessions/{id}/messages {"text"}    GET /sessions/{id}
//   GET /sessions/{id}/feedback              GET /sessions/{id}/instructor
// Errors are {"error": "<kind>", "message": "..."}.
class ApiServer {
 public:
  ApiServer(session::SessionService& service, ApiConfig config = {});
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Returns the bound port; port 0 picks a free one. Throws Error{kIo}.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace swtrain::http
