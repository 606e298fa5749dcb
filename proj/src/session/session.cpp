#include "ipseq/session/session.hpp"

#include <algorithm>

#include "ipseq/data/text.hpp"
#include "json.hpp"

namespace ipseq {

double ksmr(const EffortCounters& effort, std::string_view final_text) {
  const auto chars = std::max<std::size_t>(1, scalar_count(final_text));
  return static_cast<double>(effort.keystrokes + effort.mouse_actions) / static_cast<double>(chars);
}

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kFresh: return "fresh";
    case SessionStatus::kPredicting: return "predicting";
    case SessionStatus::kInteracting: return "interacting";
    case SessionStatus::kValidated: return "validated";
  }
  return "?";
}

std::string derive_prefix(std::string_view previous_surface, std::size_t edit_position, std::string_view typed) {
  const auto n = scalar_count(previous_surface);
  if (edit_position > n) {
    throw std::out_of_range("edit position " + std::to_string(edit_position) + " beyond hypothesis length " +
                            std::to_string(n));
  }
  return scalar_prefix(previous_surface, edit_position) + std::string(typed);
}

Session::Session(std::string id, std::string task_id, std::string sample_ref, SourceObject source)
    : id_(std::move(id)), task_id_(std::move(task_id)), sample_ref_(std::move(sample_ref)), source_(std::move(source)) {}

namespace {

void require(bool ok, SessionStatus status, const char* action) {
  if (!ok) throw SessionError("bad_state", std::string(action) + " not allowed in state " + std::string(to_string(status)));
}

}  // namespace

Prediction Session::initial_prediction(Predictor& predictor) {
  require(status_ == SessionStatus::kFresh, status_, "predict");
  status_ = SessionStatus::kPredicting;
  try {
    current_ = predictor.predict({source_, {}, false, 0});
  } catch (...) {
    status_ = SessionStatus::kFresh;
    throw;
  }
  effort_.iterations = 1;
  status_ = SessionStatus::kInteracting;
  return current_;
}

Prediction Session::apply_feedback(Predictor& predictor, std::string_view raw_prefix, std::size_t typed_len,
                                   bool moved_pointer, bool complete) {
  require(status_ == SessionStatus::kInteracting, status_, "feedback");
  const auto prefix = normalize_prefix(raw_prefix);
  auto next = predictor.predict({source_, prefix, complete, effort_.iterations});
  if (!next.text.starts_with(prefix)) {
    throw std::logic_error("predictor answer does not start with the validated prefix");
  }
  current_ = std::move(next);
  history_.push_back(prefix);
  effort_.keystrokes += typed_len;
  effort_.mouse_actions += moved_pointer ? 1 : 0;
  effort_.iterations += 1;
  return current_;
}

SessionReport Session::validate() {
  require(status_ == SessionStatus::kInteracting, status_, "validate");
  effort_.mouse_actions += 1;
  status_ = SessionStatus::kValidated;
  return {current_.text, effort_, ksmr(effort_, current_.text)};
}

std::string Session::log_record() const {
  nlohmann::json j;
  j["session_id"] = id_;
  j["task_id"] = task_id_;
  j["sample"] = sample_ref_;
  j["prefixes"] = history_;
  j["final_text"] = status_ == SessionStatus::kValidated ? nlohmann::json(current_.text) : nlohmann::json(nullptr);
  j["keystrokes"] = effort_.keystrokes;
  j["mouse_actions"] = effort_.mouse_actions;
  j["iterations"] = effort_.iterations;
  j["ksmr"] = ksmr(effort_, current_.text);
  return j.dump();
}

}  // namespace ipseq
