#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipseq/model/seq2seq.hpp"

namespace ipseq {

struct EffortCounters {
  std::size_t keystrokes = 0;
  std::size_t mouse_actions = 0;  // pointer positionings + validation click
  std::size_t iterations = 0;     // system decodes

  friend bool operator==(const EffortCounters&, const EffortCounters&) = default;
};

// (keystrokes + mouse actions) per character of the final text.
double ksmr(const EffortCounters& effort, std::string_view final_text);

enum class SessionStatus { kFresh, kPredicting, kInteracting, kValidated };

std::string_view to_string(SessionStatus s);

struct Prediction {
  std::string text;
  bool spliced = false;
  double logprob = 0.0;
};

struct PredictRequest {
  const SourceObject& source;
  std::string_view prefix;  // empty for the initial prediction
  bool complete = false;    // the prefix is the whole output
  std::size_t iteration = 0;  // 0 for the initial prediction
};

// Something that completes prefixes for a source: the neural model or a fixed
// script.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Prediction predict(const PredictRequest& request) = 0;
};

// Carries a wire error code (bad_state, unknown_session, ...).
class SessionError : public std::runtime_error {
 public:
  SessionError(std::string code, const std::string& message) : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Kept text up to `edit_position` scalars followed by the typed characters.
std::string derive_prefix(std::string_view previous_surface, std::size_t edit_position, std::string_view typed);

struct SessionReport {
  std::string final_text;
  EffortCounters effort;
  double ksmr = 0.0;
};

// One interactive-predictive exchange: an initial hypothesis, any number of
// prefix corrections, then validation. Not thread-safe; callers serialize.
class Session {
 public:
  Session(std::string id, std::string task_id, std::string sample_ref, SourceObject source);

  const std::string& id() const { return id_; }
  const std::string& task_id() const { return task_id_; }
  const std::string& sample_ref() const { return sample_ref_; }
  const SourceObject& source() const { return source_; }
  SessionStatus status() const { return status_; }
  const EffortCounters& effort() const { return effort_; }
  const Prediction& current() const { return current_; }
  const std::vector<std::string>& history() const { return history_; }

  Prediction initial_prediction(Predictor& predictor);

  // `raw_prefix` is normalized (one trailing space kept) before decoding. The
  // predictor's answer must start with it.
  Prediction apply_feedback(Predictor& predictor, std::string_view raw_prefix, std::size_t typed_len,
                            bool moved_pointer, bool complete = false);

  SessionReport validate();

  // One JSON object (no trailing newline): session_id, task_id, sample,
  // prefixes, final_text, keystrokes, mouse_actions, iterations, ksmr.
  std::string log_record() const;

 private:
  std::string id_;
  std::string task_id_;
  std::string sample_ref_;
  SourceObject source_;
  SessionStatus status_ = SessionStatus::kFresh;
  Prediction current_;
  std::vector<std::string> history_;
  EffortCounters effort_;
};

}  // namespace ipseq
