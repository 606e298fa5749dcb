#include "ipseq/session/service.hpp"

#include <cstdio>
#include <random>

#include "ipseq/data/corpus.hpp"
#include "ipseq/data/text.hpp"

namespace ipseq {

ScriptedPredictor::ScriptedPredictor(std::vector<std::string> lines) : lines_(std::move(lines)) {
  if (lines_.empty()) throw std::invalid_argument("scripted predictor: empty script");
  for (auto& l : lines_) l = normalize(l);
}

Prediction ScriptedPredictor::predict(const PredictRequest& request) {
  return {lines_[std::min(request.iteration, lines_.size() - 1)], false, 0.0};
}

Prediction NeuralPredictor::predict(const PredictRequest& request) {
  std::shared_lock lock(lock_);
  const auto& model = bundle_.network;
  const auto encoded = model.encode(request.source);
  const auto constraint = make_constraint(request.prefix, bundle_.target, request.complete);
  auto hyps = constrained_beam_search(model, bundle_.target, encoded, constraint, params_);
  auto& best = hyps.front();
  return {std::move(best.surface), best.spliced, best.logprob};
}

TaskRuntime::TaskRuntime(TaskManifest manifest) : manifest_(std::move(manifest)), online_lr_(manifest_.online_lr) {
  if (manifest_.predictor == "scripted") {
    predictor_ = std::make_unique<ScriptedPredictor>(read_lines(manifest_.script));
  } else if (manifest_.predictor == "neural") {
    bundle_ = std::make_unique<ModelBundle>(load_checkpoint(manifest_.checkpoint));
    if (bundle_->network.config().input_modality != manifest_.modality) {
      throw std::invalid_argument("task " + manifest_.id + ": checkpoint modality does not match manifest");
    }
    BeamParams params;
    params.beam_width = manifest_.beam_width;
    params.max_len = manifest_.max_len;
    params.length_normalization = length_normalization_from_string(manifest_.length_norm);
    params.validate();
    auto p = std::make_unique<NeuralPredictor>(*bundle_, params, model_lock_);
    neural_ = p.get();
    predictor_ = std::move(p);
  } else {
    throw std::invalid_argument("task " + manifest_.id + ": unknown predictor " + manifest_.predictor);
  }
  optimizer_from_string(manifest_.optimizer);
  if (!(online_lr_ >= 0.0)) throw std::invalid_argument("task " + manifest_.id + ": online_lr must be >= 0");
}

void TaskRuntime::register_split(const std::string& name, SplitFiles files) {
  std::lock_guard lock(mutex_);
  manifest_.splits[name] = std::move(files);
  cache_.erase(name);
}

bool TaskRuntime::has_split(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return manifest_.splits.count(name) > 0;
}

std::shared_ptr<const TaskRuntime::SplitData> TaskRuntime::split_data(const std::string& name) {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(name); it != cache_.end()) return it->second;
  auto files = manifest_.splits.find(name);
  if (files == manifest_.splits.end()) throw std::out_of_range("task " + manifest_.id + " has no split " + name);
  auto d = std::make_shared<SplitData>();
  auto corpus = load_parallel(files->second.source, files->second.target);
  d->sources = std::move(corpus.sources);
  d->targets = std::move(corpus.targets);
  for (auto& t : d->targets) t = normalize(t);
  if (files->second.media) {
    d->media = read_lines(*files->second.media);
    if (d->media.size() != d->sources.size()) throw std::invalid_argument("media list length differs from split " + name);
  }
  d->base_dir = files->second.source.parent_path();
  cache_[name] = d;
  return d;
}

std::size_t TaskRuntime::sample_count(const std::string& split) { return split_data(split)->sources.size(); }

SourceObject TaskRuntime::prepare_source(const std::string& line, const std::filesystem::path& base_dir) const {
  if (!bundle_) return std::vector<TokenId>{};
  if (manifest_.modality == Modality::kFeatures) {
    const std::filesystem::path p(line);
    return load_feature_sequence(p.is_absolute() ? p : base_dir / p);
  }
  auto ids = bundle_->source.tokenize(line);
  ids.pop_back();
  if (ids.empty()) ids.push_back(kUnkId);
  return ids;
}

std::string TaskRuntime::preview(const std::string& split, std::size_t index) {
  const auto d = split_data(split);
  if (index >= d->sources.size()) throw std::out_of_range("sample index out of range");
  if (!d->media.empty()) return "/media/" + manifest_.id + "/" + d->media[index];
  return manifest_.modality == Modality::kText ? normalize(d->sources[index]) : d->sources[index];
}

Sample TaskRuntime::sample(const std::string& split, std::size_t index) {
  const auto d = split_data(split);
  if (index >= d->sources.size()) throw std::out_of_range("sample index out of range");
  return {prepare_source(d->sources[index], d->base_dir), preview(split, index), d->targets[index]};
}

Prediction TaskRuntime::predict(const PredictRequest& request) { return predictor_->predict(request); }

double TaskRuntime::online_lr() const {
  std::lock_guard lock(mutex_);
  return online_lr_;
}

void TaskRuntime::set_online_lr(double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("online learning rate must be >= 0");
  std::lock_guard lock(mutex_);
  online_lr_ = lr;
}

void TaskRuntime::set_beam_width(std::size_t width) {
  if (width < 1) throw std::invalid_argument("beam width must be >= 1");
  if (!neural_) return;
  std::unique_lock lock(model_lock_);
  neural_->params().beam_width = width;
}

std::optional<UpdateReport> TaskRuntime::learn(const SourceObject& source, const std::string& text) {
  const double lr = online_lr();
  if (!bundle_ || lr == 0.0) return std::nullopt;
  TrainConfig config;
  config.optimizer = optimizer_from_string(manifest_.optimizer);
  config.learning_rate = lr;
  config.gradient_clip_norm = manifest_.clip_norm;
  std::unique_lock lock(model_lock_);
  return online_update(bundle_->network, bundle_->optimizer, source, bundle_->target.tokenize(text), config);
}

InteractiveService::InteractiveService(const std::vector<TaskManifest>& manifests) {
  for (const auto& m : manifests) {
    if (tasks_.count(m.id)) throw std::invalid_argument("duplicate task id " + m.id);
    tasks_.emplace(m.id, std::make_unique<TaskRuntime>(m));
  }
  nonce_ = std::random_device{}();
}

std::unique_ptr<InteractiveService> InteractiveService::from_directory(const std::filesystem::path& tasks_dir) {
  return std::make_unique<InteractiveService>(load_manifests(tasks_dir));
}

std::vector<TaskInfo> InteractiveService::tasks() const {
  std::vector<TaskInfo> out;
  for (const auto& [id, t] : tasks_) out.push_back({id, t->manifest().name, t->manifest().modality});
  return out;
}

TaskRuntime& InteractiveService::task(const std::string& id) const {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw ServiceError("unknown_task", "unknown task '" + id + "'");
  return *it->second;
}

std::vector<SampleInfo> InteractiveService::samples(const std::string& task_id, const std::string& split) {
  auto& t = task(task_id);
  const auto name = split.empty() ? t.manifest().samples_split : split;
  if (!t.has_split(name)) throw ServiceError("unknown_sample", "task '" + task_id + "' has no split '" + name + "'");
  std::vector<SampleInfo> out;
  const auto n = t.sample_count(name);
  for (std::size_t i = 0; i < n; ++i) out.push_back({std::to_string(i), t.preview(name, i)});
  return out;
}

std::string InteractiveService::next_session_id() {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08llx-%llu", static_cast<unsigned long long>(nonce_ & 0xffffffffu),
                static_cast<unsigned long long>(++counter_));
  return buf;
}

StartResult InteractiveService::start_session(const std::string& task_id, const std::string& sample_id,
                                              const std::string& split) {
  auto& t = task(task_id);
  const auto name = split.empty() ? t.manifest().samples_split : split;
  if (!t.has_split(name)) throw ServiceError("unknown_sample", "task '" + task_id + "' has no split '" + name + "'");
  std::size_t index = 0;
  std::size_t used = 0;
  try {
    index = std::stoul(sample_id, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (sample_id.empty() || used != sample_id.size() || index >= t.sample_count(name)) {
    throw ServiceError("unknown_sample", "unknown sample '" + sample_id + "' in " + task_id + "/" + name);
  }
  Sample s = t.sample(name, index);
  std::lock_guard lock(sessions_mutex_);
  auto id = next_session_id();
  auto slot = std::make_shared<Slot>(Session(id, task_id, name + "/" + sample_id, std::move(s.source)), &t);
  sessions_.emplace(id, std::move(slot));
  return {id, s.preview};
}

std::shared_ptr<InteractiveService::Slot> InteractiveService::find(const std::string& session_id) {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError("unknown_session", "unknown session '" + session_id + "'");
  return it->second;
}

namespace {

// Exclusive use of a session for one request, or "busy".
std::unique_lock<std::mutex> claim(std::mutex& m) {
  std::unique_lock lock(m, std::try_to_lock);
  if (!lock.owns_lock()) throw ServiceError("busy", "session has a request in flight");
  return lock;
}

template <class F>
auto translate_errors(F&& f) {
  try {
    return f();
  } catch (const SessionError& e) {
    throw ServiceError(e.code(), e.what());
  }
}

}  // namespace

Prediction InteractiveService::predict(const std::string& session_id) {
  auto slot = find(session_id);
  auto lock = claim(slot->busy);
  return translate_errors([&] { return slot->session.initial_prediction(*slot->task); });
}

Prediction InteractiveService::feedback(const std::string& session_id, const std::string& prefix,
                                        std::size_t typed_len, bool moved_pointer, bool complete) {
  auto slot = find(session_id);
  auto lock = claim(slot->busy);
  return translate_errors(
      [&] { return slot->session.apply_feedback(*slot->task, prefix, typed_len, moved_pointer, complete); });
}

ValidateResult InteractiveService::validate(const std::string& session_id, bool learn) {
  auto slot = find(session_id);
  auto lock = claim(slot->busy);
  ValidateResult out;
  out.report = translate_errors([&] { return slot->session.validate(); });
  if (learn) out.update = slot->task->learn(slot->session.source(), out.report.final_text);
  {
    std::lock_guard log_lock(log_mutex_);
    if (log_.is_open()) log_ << slot->session.log_record() << '\n' << std::flush;
  }
  return out;
}

void InteractiveService::set_session_log(const std::filesystem::path& path) {
  std::lock_guard lock(log_mutex_);
  log_.close();
  log_.open(path, std::ios::app);
  if (!log_) throw std::runtime_error("cannot open session log " + path.string());
}

}  // namespace ipseq
