#include <fstream>

#include "../support/search_oracle.hpp"
#include "../support/task_fixtures.hpp"
#include "doctest.h"
#include "httplib.h"
#include "ipseq/server/http_server.hpp"
#include "json.hpp"

using namespace ipseq;
using nlohmann::json;

namespace {

ModelBundle char_bundle(std::uint64_t seed) {
  Tokenizer src(TokenMode::kChar, Vocabulary({"1", "2", "3"}));
  Tokenizer tgt(TokenMode::kChar, Vocabulary({"a", "b", " ", "c"}));
  auto net = oracle::random_model(src.vocab().size(), tgt.vocab().size(), 6, seed, 0.8);
  return ModelBundle{std::move(net), std::move(src), std::move(tgt), {}};
}

struct Fixture {
  std::filesystem::path dir = fixtures::fresh_dir("server");
  std::unique_ptr<InteractiveService> service;
  std::unique_ptr<HttpServer> server;
  std::string url;

  Fixture() {
    fixtures::write_football_task(dir);
    auto m = fixtures::write_neural_task(dir, "toy", char_bundle(11), {"12", "321"}, {"ab", "c a"});
    std::filesystem::create_directories(dir / "media");
    std::ofstream(dir / "media" / "clip.txt") << "pixels";
    m.media_dir = dir / "media";
    write_manifest(dir / "toy.task", m);
    std::filesystem::create_directories(dir / "www");
    std::ofstream(dir / "www" / "index.html") << "<html></html>";

    service = InteractiveService::from_directory(dir);
    server = std::make_unique<HttpServer>(*service, ServerOptions{"127.0.0.1", 0, dir / "www"});
    url = "http://127.0.0.1:" + std::to_string(server->start());
  }
};

std::pair<int, json> raw_post(const std::string& url, const std::string& path, const std::string& body) {
  httplib::Client c(url);
  auto res = c.Post(path, body, "application/json");
  REQUIRE(res);
  return {res->status, json::parse(res->body)};
}

}  // namespace

TEST_CASE("version, tasks and samples") {
  Fixture f;
  HttpClient client(f.url);
  CHECK(client.schema_version() == 1);
  auto tasks = client.tasks();
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[0].id == "football");
  CHECK(tasks[0].modality == Modality::kFeatures);
  CHECK(tasks[1].id == "toy");
  auto samples = client.samples("toy");
  REQUIRE(samples.size() == 2);
  CHECK(samples[1].id == "1");
  CHECK(samples[1].preview == "321");
  CHECK_THROWS_AS(client.samples("nope"), ServiceError);
}

TEST_CASE("error objects and status codes") {
  Fixture f;
  auto [status, body] = raw_post(f.url, "/session", "{not json");
  CHECK(status == 400);
  CHECK(body["ok"] == false);
  CHECK(body["code"] == "bad_request");

  std::tie(status, body) = raw_post(f.url, "/session", R"({"task_id":"toy"})");
  CHECK(status == 400);
  std::tie(status, body) = raw_post(f.url, "/session", R"({"task_id":"zzz","sample_id":"0"})");
  CHECK(status == 404);
  CHECK(body["code"] == "unknown_task");
  std::tie(status, body) = raw_post(f.url, "/session", R"({"task_id":"toy","sample_id":"9"})");
  CHECK(body["code"] == "unknown_sample");
  std::tie(status, body) = raw_post(f.url, "/predict", R"({"session_id":"gone"})");
  CHECK(status == 404);
  CHECK(body["code"] == "unknown_session");
  std::tie(status, body) = raw_post(f.url, "/nowhere", "{}");
  CHECK(body["code"] == "not_found");

  std::tie(status, body) = raw_post(f.url, "/session", R"({"task_id":"toy","sample_id":"0"})");
  CHECK(status == 200);
  CHECK(body["ok"] == true);
  CHECK(body["source_preview"] == "12");
  const std::string sid = body["session_id"];
  std::tie(status, body) = raw_post(f.url, "/feedback", json{{"session_id", sid}, {"prefix", "a"}, {"typed_len", 1},
                                                              {"moved_pointer", true}}.dump());
  CHECK(status == 409);
  CHECK(body["code"] == "bad_state");
  std::tie(status, body) = raw_post(f.url, "/predict", json{{"session_id", sid}}.dump());
  CHECK(status == 200);
  CHECK(body.contains("hypothesis"));
  CHECK(body["spliced"].is_boolean());
  std::tie(status, body) = raw_post(f.url, "/feedback", json{{"session_id", sid}, {"prefix", "a"}, {"typed_len", -1},
                                                              {"moved_pointer", true}}.dump());
  CHECK(status == 400);
  std::tie(status, body) = raw_post(f.url, "/validate", json{{"session_id", sid}, {"learn", false}}.dump());
  CHECK(status == 200);
  for (const char* k : {"final_text", "keystrokes", "mouse_actions", "iterations", "ksmr"}) CHECK(body.contains(k));
  std::tie(status, body) = raw_post(f.url, "/validate", json{{"session_id", sid}, {"learn", false}}.dump());
  CHECK(body["code"] == "bad_state");
}

TEST_CASE("static files and media") {
  Fixture f;
  httplib::Client c(f.url);
  auto index = c.Get("/index.html");
  REQUIRE(index);
  CHECK(index->status == 200);
  CHECK(index->body == "<html></html>");
  auto media = c.Get("/media/toy/clip.txt");
  REQUIRE(media);
  CHECK(media->body == "pixels");
  auto missing = c.Get("/media/toy/none.txt");
  REQUIRE(missing);
  CHECK(missing->status == 404);
}

TEST_CASE("football replay over HTTP matches in-process") {
  Fixture f;
  HttpClient http(f.url);
  InProcessClient local(*f.service);
  auto a = simulate_sample(http, "football", "test", "0", fixtures::kFootballFinal, {});
  auto b = simulate_sample(local, "football", "test", "0", fixtures::kFootballFinal, {});
  CHECK(a.prefixes == b.prefixes);
  CHECK(a.final_text == b.final_text);
  CHECK(a.final_text == fixtures::kFootballFinal);
  CHECK(a.keystrokes == 3);
  CHECK(a.mouse_actions == 4);
  CHECK(a.ksmr == b.ksmr);
}

TEST_CASE("unknown sessions after a restart are clean errors") {
  std::string sid;
  {
    Fixture f;
    HttpClient c(f.url);
    sid = c.start_session("toy", "0", "").session_id;
  }
  Fixture g;
  HttpClient c(g.url);
  try {
    c.predict(sid);
    FAIL("stale session accepted");
  } catch (const ServiceError& e) {
    CHECK(e.code() == "unknown_session");
  }
}
