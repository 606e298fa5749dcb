#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ipseq/data/task_manifest.hpp"
#include "ipseq/decode/beam_search.hpp"
#include "ipseq/learn/trainer.hpp"
#include "ipseq/model/checkpoint.hpp"
#include "ipseq/session/session.hpp"

namespace ipseq {

// Returns the script lines in order, one per prediction of a session
// (repeating the last line once exhausted). Ignores source and prefix.
class ScriptedPredictor : public Predictor {
 public:
  explicit ScriptedPredictor(std::vector<std::string> lines);
  Prediction predict(const PredictRequest& request) override;

 private:
  std::vector<std::string> lines_;
};

// Constrained beam search over a shared model. Decodes hold the shared side of
// `lock`; online updates take the exclusive side.
class NeuralPredictor : public Predictor {
 public:
  NeuralPredictor(const ModelBundle& bundle, BeamParams params, std::shared_mutex& lock)
      : bundle_(bundle), params_(params), lock_(lock) {}
  Prediction predict(const PredictRequest& request) override;

  BeamParams& params() { return params_; }

 private:
  const ModelBundle& bundle_;
  BeamParams params_;
  std::shared_mutex& lock_;
};

struct Sample {
  SourceObject source;
  std::string preview;    // source text, or a media / feature file reference
  std::string reference;  // normalized target text
};

// A loaded task: manifest, predictor, optional model, and its sample splits.
class TaskRuntime : public Predictor {
 public:
  explicit TaskRuntime(TaskManifest manifest);

  const TaskManifest& manifest() const { return manifest_; }
  bool is_neural() const { return bundle_ != nullptr; }
  const ModelBundle* bundle() const { return bundle_.get(); }

  void register_split(const std::string& name, SplitFiles files);
  bool has_split(const std::string& name) const;
  std::size_t sample_count(const std::string& split);
  Sample sample(const std::string& split, std::size_t index);
  std::string preview(const std::string& split, std::size_t index);

  // Tokenizes (text) or loads (features) a source as the model expects it.
  SourceObject prepare_source(const std::string& source_line, const std::filesystem::path& base_dir) const;

  Prediction predict(const PredictRequest& request) override;

  double online_lr() const;
  void set_online_lr(double lr);
  void set_beam_width(std::size_t width);

  // One online step on (source, text) when the task has a model and a
  // positive learning rate; nullopt otherwise.
  std::optional<UpdateReport> learn(const SourceObject& source, const std::string& text);

 private:
  struct SplitData {
    std::vector<std::string> sources, targets, media;
    std::filesystem::path base_dir;
  };
  std::shared_ptr<const SplitData> split_data(const std::string& name);

  TaskManifest manifest_;
  std::unique_ptr<ModelBundle> bundle_;
  std::unique_ptr<Predictor> predictor_;
  NeuralPredictor* neural_ = nullptr;
  std::shared_mutex model_lock_;
  mutable std::mutex mutex_;  // splits, cache, config
  std::map<std::string, std::shared_ptr<const SplitData>> cache_;
  double online_lr_ = 0.0;
};

class ServiceError : public std::runtime_error {
 public:
  ServiceError(std::string code, const std::string& message) : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct TaskInfo {
  std::string id;
  std::string name;
  Modality modality;
};

struct SampleInfo {
  std::string id;
  std::string preview;
};

struct StartResult {
  std::string session_id;
  std::string source_preview;
};

struct ValidateResult {
  SessionReport report;
  std::optional<UpdateReport> update;
};

// The interactive protocol over a set of tasks. Thread-safe: distinct sessions
// proceed concurrently; a request on a session that is already busy fails with
// code "busy".
class InteractiveService {
 public:
  explicit InteractiveService(const std::vector<TaskManifest>& manifests);
  static std::unique_ptr<InteractiveService> from_directory(const std::filesystem::path& tasks_dir);

  std::vector<TaskInfo> tasks() const;
  TaskRuntime& task(const std::string& id) const;
  std::vector<SampleInfo> samples(const std::string& task_id, const std::string& split = "");

  StartResult start_session(const std::string& task_id, const std::string& sample_id, const std::string& split = "");
  Prediction predict(const std::string& session_id);
  Prediction feedback(const std::string& session_id, const std::string& prefix, std::size_t typed_len,
                      bool moved_pointer, bool complete = false);
  ValidateResult validate(const std::string& session_id, bool learn);

  // Appends one JSON line per validated session.
  void set_session_log(const std::filesystem::path& path);

 private:
  struct Slot {
    Slot(Session s, TaskRuntime* t) : session(std::move(s)), task(t) {}
    std::mutex busy;
    Session session;
    TaskRuntime* task;
  };
  std::shared_ptr<Slot> find(const std::string& session_id);
  std::string next_session_id();

  std::map<std::string, std::unique_ptr<TaskRuntime>> tasks_;
  std::mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t counter_ = 0;
  std::uint64_t nonce_;
  std::mutex log_mutex_;
  std::ofstream log_;
};

}  // namespace ipseq
