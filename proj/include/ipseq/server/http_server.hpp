#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "ipseq/session/service.hpp"
#include "ipseq/sim/simulator.hpp"

namespace ipseq {

inline constexpr int kSchemaVersion = 1;

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON object with an "ok" field
};

// Routes one API request to the service. Never throws: failures become
// {ok:false, code, message} with 400 (bad_request), 404 (unknown_*),
// 409 (bad_state, busy) or 500 (internal).
ApiResponse handle_api(InteractiveService& service, std::string_view method, std::string_view path,
                       std::string_view body);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;  // served at / when set
};

// The API plus static files and per-task media under /media/<task_id>/.
class HttpServer {
 public:
  HttpServer(InteractiveService& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the actual port. Throws std::runtime_error on failure.
  int bind();
  // Serves until stop(); bind() first.
  void listen();
  // bind() and listen() on a background thread.
  int start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

// ProtocolClient over HTTP. Error objects are rethrown as ServiceError with
// the server's code.
class HttpClient : public ProtocolClient {
 public:
  explicit HttpClient(const std::string& base_url);  // e.g. http://127.0.0.1:8080
  ~HttpClient() override;

  int schema_version();
  std::vector<TaskInfo> tasks();
  std::vector<SampleInfo> samples(const std::string& task_id);

  StartResult start_session(const std::string& task_id, const std::string& sample_id,
                            const std::string& split) override;
  Prediction predict(const std::string& session_id) override;
  Prediction feedback(const std::string& session_id, const std::string& prefix, std::size_t typed_len,
                      bool moved_pointer, bool complete) override;
  SessionReport validate(const std::string& session_id, bool learn) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ipseq
