// ipseq: demo data generation, training, serving and user simulation.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ipseq/data/text.hpp"
#include "ipseq/demo/demo_tasks.hpp"
#include "ipseq/server/http_server.hpp"

using namespace ipseq;
namespace fs = std::filesystem;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int gen_demo(const fs::path& out, const DemoOptions& options) {
  write_demo_tasks(out, options, [](const std::string& line) { std::cerr << line << std::endl; });
  std::cout << "demo tasks written to " << out.string() << "\n";
  return 0;
}

int train_cmd(const fs::path& manifest_path, TrainTaskOptions options, bool quiet) {
  const auto manifest = parse_manifest(manifest_path);
  std::size_t last_epoch = 0;
  const auto result = train_task(manifest, options, [&](const LossPoint& p) {
    if (!quiet && p.epoch != last_epoch && p.batch == 1) {
      last_epoch = p.epoch;
      std::fprintf(stderr, "epoch %zu loss %.6f\n", p.epoch, p.loss);
    }
  });
  std::printf("checkpoint %s\n", manifest.checkpoint.string().c_str());
  std::printf("train exact match %.4f\n", result.train_exact);
  if (result.held_out_exact >= 0) {
    std::printf("%s exact match %.4f\n", manifest.samples_split.c_str(), result.held_out_exact);
  }
  return 0;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path tasks_dir = "tasks";
  fs::path static_dir;
  fs::path session_log;
};

int serve(const ServeArgs& a) {
  auto service = InteractiveService::from_directory(a.tasks_dir);
  if (!a.session_log.empty()) service->set_session_log(a.session_log);
  HttpServer server(*service, {a.host, a.port, a.static_dir});
  const int port = server.bind();
  std::printf("serving %zu tasks on http://%s:%d\n", service->tasks().size(), a.host.c_str(), port);
  std::fflush(stdout);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

struct SimulateArgs {
  std::string task;
  std::string split;
  bool learn = false;
  double lr = 0.05;
  std::size_t beam = 0;
  std::size_t burst = 1;
  bool in_process = false;
  std::string server_url;
  std::size_t parallel = 1;
  fs::path report;
  fs::path tasks_dir = "tasks";
};

int simulate(const SimulateArgs& a) {
  std::string split = a.split;
  std::optional<SplitFiles> pair;
  if (const auto comma = split.find(','); comma != std::string::npos) {
    pair = SplitFiles{split.substr(0, comma), split.substr(comma + 1), std::nullopt};
    split = "cli:" + a.split;
  }

  std::vector<std::string> references;
  std::unique_ptr<InteractiveService> service;
  std::unique_ptr<HttpServer> server;
  std::string url = a.server_url;
  if (!url.empty()) {
    if (pair) throw std::invalid_argument("a source,target split needs the embedded server or --in-process");
    const auto manifest = parse_manifest(a.tasks_dir / (a.task + ".task"));
    const auto& files = manifest.split(split);
    references = load_parallel(files.source, files.target).targets;
  } else {
    service = InteractiveService::from_directory(a.tasks_dir);
    auto& task = [&]() -> TaskRuntime& {
      try {
        return service->task(a.task);
      } catch (const ServiceError& e) {
        throw std::invalid_argument(e.what());
      }
    }();
    if (pair) task.register_split(split, *pair);
    if (!task.has_split(split)) throw std::invalid_argument("task " + a.task + " has no split " + split);
    task.set_online_lr(a.learn ? a.lr : 0.0);
    if (a.beam > 0) task.set_beam_width(a.beam);
    const auto& files = task.manifest().split(split);
    references = load_parallel(files.source, files.target).targets;
    if (!a.in_process) {
      server = std::make_unique<HttpServer>(*service, ServerOptions{"127.0.0.1", 0, {}});
      url = "http://127.0.0.1:" + std::to_string(server->start());
    }
  }
  for (auto& r : references) r = normalize(r);

  ClientFactory factory;
  if (a.in_process) {
    factory = [&] { return std::make_unique<InProcessClient>(*service); };
  } else {
    if (HttpClient(url).schema_version() != kSchemaVersion) throw std::runtime_error("server schema version mismatch");
    factory = [&] { return std::make_unique<HttpClient>(url); };
  }

  SimulationOptions options;
  options.burst = a.burst;
  options.learn = a.learn;
  const auto summary = simulate_corpus(factory, a.task, split, references, options, a.parallel);

  if (!a.report.empty()) {
    std::ofstream out(a.report);
    if (!out) throw std::runtime_error("cannot write " + a.report.string());
    write_report(out, summary.rows);
  } else {
    write_report(std::cout, summary.rows);
  }
  std::fprintf(stderr, "samples %zu, converged %.4f, mean KSMR %.4f, retype KSMR %.4f\n", summary.rows.size(),
               summary.converged_fraction, summary.mean_ksmr, summary.retype_ksmr);
  if (a.learn) {
    std::fprintf(stderr, "first-half KSMR %.4f, second-half KSMR %.4f\n", summary.first_half_ksmr,
                 summary.second_half_ksmr);
  }
  return summary.converged_fraction == 1.0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive-predictive sequence-to-sequence engine"};
  app.require_subcommand(1);

  fs::path demo_out = "tasks";
  DemoOptions demo;
  auto* gen = app.add_subcommand("gen-demo", "Write (and train) the demo tasks");
  gen->add_option("--out", demo_out, "Output tasks directory");
  gen->add_option("--train-pairs", demo.train_pairs);
  gen->add_option("--test-pairs", demo.test_pairs);
  gen->add_option("--epochs", demo.epochs);
  gen->add_option("--seed", demo.seed);
  bool no_train = false;
  gen->add_flag("--no-train", no_train, "Write data and manifests only");

  fs::path manifest;
  TrainTaskOptions topt;
  std::string optimizer = "sgd";
  bool quiet = false;
  auto* tr = app.add_subcommand("train", "Train a task's model from its training split");
  tr->add_option("--task", manifest, "Task manifest (.task)")->required()->check(CLI::ExistingFile);
  tr->add_option("--split", topt.split);
  tr->add_option("--optimizer", optimizer)->check(CLI::IsMember({"sgd", "adadelta"}));
  tr->add_option("--lr", topt.train.learning_rate)->check(CLI::NonNegativeNumber);
  tr->add_option("--batch", topt.train.batch_size)->check(CLI::PositiveNumber);
  tr->add_option("--epochs", topt.train.epochs);
  tr->add_option("--clip", topt.train.gradient_clip_norm);
  tr->add_option("--seed", topt.train.seed);
  tr->add_option("--init-seed", topt.init_seed);
  tr->add_option("--embedding-dim", topt.shape.embedding_dim);
  tr->add_option("--hidden-dim", topt.shape.hidden_dim);
  tr->add_option("--attention-dim", topt.shape.attention_dim);
  tr->add_option("--max-vocab", topt.shape.max_vocab);
  tr->add_option("--loss-curve", topt.loss_curve, "Write epoch/batch/loss TSV");
  tr->add_flag("--quiet", quiet);

  ServeArgs sv;
  auto* srv = app.add_subcommand("serve", "Run the HTTP service");
  srv->add_option("--host", sv.host)->envname("HOST");
  srv->add_option("--port", sv.port)->envname("PORT")->check(CLI::Range(0, 65535));
  srv->add_option("--tasks-dir", sv.tasks_dir)->envname("TASKS_DIR")->check(CLI::ExistingDirectory);
  srv->add_option("--static-dir", sv.static_dir, "Web client files served at /")->check(CLI::ExistingDirectory);
  srv->add_option("--session-log", sv.session_log, "Append validated sessions as JSON lines");

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Replay references through the protocol as a simulated user");
  sm->add_option("--task", sim.task)->required();
  sm->add_option("--split", sim.split, "Split name or source,target file pair")->required();
  sm->add_flag("--learn", sim.learn, "Update the model after each validated sample");
  sm->add_option("--lr", sim.lr, "Online learning rate with --learn")->check(CLI::NonNegativeNumber);
  sm->add_option("--beam", sim.beam)->check(CLI::PositiveNumber);
  sm->add_option("--burst", sim.burst, "Characters typed per correction")->check(CLI::PositiveNumber);
  auto* inproc = sm->add_flag("--in-process", sim.in_process, "Bypass HTTP");
  sm->add_option("--server", sim.server_url, "Use a running server instead of an embedded one")->excludes(inproc);
  sm->add_option("--parallel", sim.parallel)->check(CLI::PositiveNumber);
  sm->add_option("--report", sim.report, "Report TSV (default stdout)");
  sm->add_option("--tasks-dir", sim.tasks_dir)->envname("TASKS_DIR");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      demo.train = !no_train;
      return gen_demo(demo_out, demo);
    }
    if (tr->parsed()) {
      topt.train.optimizer = optimizer_from_string(optimizer);
      return train_cmd(manifest, topt, quiet);
    }
    if (srv->parsed()) return serve(sv);
    return simulate(sim);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
