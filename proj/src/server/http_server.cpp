#include "ipseq/server/http_server.hpp"

#include <stdexcept>

#include "httplib.h"
#include "json.hpp"

namespace ipseq {

using nlohmann::json;

namespace {

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int status_for(const std::string& code) {
  if (code == "bad_request") return 400;
  if (code.starts_with("unknown_") || code == "not_found") return 404;
  if (code == "bad_state" || code == "busy") return 409;
  return 500;
}

ApiResponse error(const std::string& code, const std::string& message) {
  return {status_for(code), json{{"ok", false}, {"code", code}, {"message", message}}.dump()};
}

ApiResponse ok(json body) {
  body["ok"] = true;
  return {200, body.dump()};
}

json parse_body(std::string_view body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BadRequest("request body must be a JSON object");
  return j;
}

std::string text_field(const json& j, const char* name, bool required = true) {
  auto it = j.find(name);
  if (it == j.end()) {
    if (required) throw BadRequest(std::string("missing field '") + name + "'");
    return "";
  }
  if (!it->is_string()) throw BadRequest(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

bool bool_field(const json& j, const char* name, bool fallback) {
  auto it = j.find(name);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw BadRequest(std::string("field '") + name + "' must be a boolean");
  return it->get<bool>();
}

std::size_t count_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw BadRequest(std::string("missing field '") + name + "'");
  if (!it->is_number_unsigned()) throw BadRequest(std::string("field '") + name + "' must be a non-negative integer");
  return it->get<std::size_t>();
}

json prediction_json(const Prediction& p) { return {{"hypothesis", p.text}, {"spliced", p.spliced}}; }

ApiResponse route(InteractiveService& service, std::string_view method, std::string_view path,
                  std::string_view body) {
  if (method == "GET") {
    if (path == "/version") return ok({{"schema_version", kSchemaVersion}});
    if (path == "/tasks") {
      json tasks = json::array();
      for (const auto& t : service.tasks()) {
        tasks.push_back({{"id", t.id}, {"name", t.name}, {"modality", to_string(t.modality)}});
      }
      return ok({{"tasks", tasks}});
    }
    constexpr std::string_view kTasks = "/tasks/", kSamples = "/samples";
    if (path.starts_with(kTasks) && path.ends_with(kSamples) && path.size() > kTasks.size() + kSamples.size()) {
      const std::string id(path.substr(kTasks.size(), path.size() - kTasks.size() - kSamples.size()));
      json samples = json::array();
      for (const auto& s : service.samples(id)) samples.push_back({{"id", s.id}, {"preview", s.preview}});
      return ok({{"samples", samples}});
    }
    return error("not_found", "no such resource: " + std::string(path));
  }
  if (method != "POST") return error("not_found", "unsupported method " + std::string(method));

  if (path == "/session") {
    const auto j = parse_body(body);
    const auto r = service.start_session(text_field(j, "task_id"), text_field(j, "sample_id"),
                                         text_field(j, "split", false));
    return ok({{"session_id", r.session_id}, {"source_preview", r.source_preview}});
  }
  if (path == "/predict") {
    const auto j = parse_body(body);
    return ok(prediction_json(service.predict(text_field(j, "session_id"))));
  }
  if (path == "/feedback") {
    const auto j = parse_body(body);
    const auto p = service.feedback(text_field(j, "session_id"), text_field(j, "prefix"), count_field(j, "typed_len"),
                                    bool_field(j, "moved_pointer", false), bool_field(j, "complete", false));
    return ok(prediction_json(p));
  }
  if (path == "/validate") {
    const auto j = parse_body(body);
    const auto v = service.validate(text_field(j, "session_id"), bool_field(j, "learn", false));
    json out{{"final_text", v.report.final_text},
             {"keystrokes", v.report.effort.keystrokes},
             {"mouse_actions", v.report.effort.mouse_actions},
             {"iterations", v.report.effort.iterations},
             {"ksmr", v.report.ksmr}};
    if (v.update) out["update"] = {{"loss_before", v.update->loss_before}, {"loss_after", v.update->loss_after}};
    return ok(out);
  }
  return error("not_found", "no such resource: " + std::string(path));
}

}  // namespace

ApiResponse handle_api(InteractiveService& service, std::string_view method, std::string_view path,
                       std::string_view body) {
  try {
    return route(service, method, path, body);
  } catch (const ServiceError& e) {
    return error(e.code(), e.what());
  } catch (const SessionError& e) {
    return error(e.code(), e.what());
  } catch (const BadRequest& e) {
    return error("bad_request", e.what());
  } catch (const std::invalid_argument& e) {
    return error("bad_request", e.what());
  } catch (const std::out_of_range& e) {
    return error("bad_request", e.what());
  } catch (const std::exception& e) {
    return error("internal", e.what());
  }
}

struct HttpServer::Impl {
  httplib::Server server;
  ServerOptions options;
};

HttpServer::HttpServer(InteractiveService& service, ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  auto& srv = impl_->server;
  auto api = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_api(service, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  srv.Get(".*", api);
  srv.Post(".*", api);
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    const auto r = error("internal", "unhandled server error");
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });

  for (const auto& t : service.tasks()) {
    const auto& m = service.task(t.id).manifest();
    if (m.media_dir && !srv.set_mount_point("/media/" + t.id, m.media_dir->string())) {
      throw std::runtime_error("media directory not found: " + m.media_dir->string());
    }
  }
  const auto& dir = impl_->options.static_dir;
  if (!dir.empty() && !srv.set_mount_point("/", dir.string())) {
    throw std::runtime_error("static directory not found: " + dir.string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  const auto& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
  } else if (!impl_->server.bind_to_port(o.host, port)) {
    port = -1;
  }
  if (port < 0) throw std::runtime_error("cannot bind " + o.host + ":" + std::to_string(o.port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

int HttpServer::start() {
  const int port = bind();
  thread_ = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

struct HttpClient::Impl {
  explicit Impl(const std::string& url) : client(url) {}
  httplib::Client client;

  json call(const std::string& path, const json* body) {
    auto res = body ? client.Post(path, body->dump(), "application/json") : client.Get(path);
    if (!res) throw std::runtime_error("HTTP " + path + ": " + httplib::to_string(res.error()));
    auto j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::runtime_error("HTTP " + path + ": malformed response");
    if (!j.value("ok", false)) throw ServiceError(j.value("code", "internal"), j.value("message", ""));
    return j;
  }
  json post(const std::string& path, const json& body) { return call(path, &body); }
};

HttpClient::HttpClient(const std::string& base_url) : impl_(std::make_unique<Impl>(base_url)) {
  impl_->client.set_read_timeout(600);
  impl_->client.set_keep_alive(true);
}

HttpClient::~HttpClient() = default;

int HttpClient::schema_version() { return impl_->call("/version", nullptr).at("schema_version").get<int>(); }

std::vector<TaskInfo> HttpClient::tasks() {
  std::vector<TaskInfo> out;
  const auto j = impl_->call("/tasks", nullptr);
  for (const auto& t : j.at("tasks")) {
    out.push_back({t.at("id"), t.at("name"), modality_from_string(t.at("modality").get<std::string>())});
  }
  return out;
}

std::vector<SampleInfo> HttpClient::samples(const std::string& task_id) {
  std::vector<SampleInfo> out;
  const auto j = impl_->call("/tasks/" + task_id + "/samples", nullptr);
  for (const auto& s : j.at("samples")) {
    out.push_back({s.at("id"), s.at("preview")});
  }
  return out;
}

StartResult HttpClient::start_session(const std::string& task_id, const std::string& sample_id,
                                      const std::string& split) {
  json body{{"task_id", task_id}, {"sample_id", sample_id}};
  if (!split.empty()) body["split"] = split;
  const auto j = impl_->post("/session", body);
  return {j.at("session_id"), j.at("source_preview")};
}

Prediction HttpClient::predict(const std::string& session_id) {
  const auto j = impl_->post("/predict", {{"session_id", session_id}});
  return {j.at("hypothesis"), j.at("spliced"), 0.0};
}

Prediction HttpClient::feedback(const std::string& session_id, const std::string& prefix, std::size_t typed_len,
                                bool moved_pointer, bool complete) {
  json body{{"session_id", session_id}, {"prefix", prefix}, {"typed_len", typed_len}, {"moved_pointer", moved_pointer}};
  if (complete) body["complete"] = true;
  const auto j = impl_->post("/feedback", body);
  return {j.at("hypothesis"), j.at("spliced"), 0.0};
}

SessionReport HttpClient::validate(const std::string& session_id, bool learn) {
  const auto j = impl_->post("/validate", {{"session_id", session_id}, {"learn", learn}});
  SessionReport r;
  r.final_text = j.at("final_text");
  r.effort.keystrokes = j.at("keystrokes");
  r.effort.mouse_actions = j.at("mouse_actions");
  r.effort.iterations = j.at("iterations");
  r.ksmr = j.at("ksmr");
  return r;
}

}  // namespace ipseq
