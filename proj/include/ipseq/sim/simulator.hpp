#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ipseq/session/service.hpp"

namespace ipseq {

// The protocol as seen by a client, over HTTP or in-process.
class ProtocolClient {
 public:
  virtual ~ProtocolClient() = default;
  virtual StartResult start_session(const std::string& task_id, const std::string& sample_id,
                                    const std::string& split) = 0;
  virtual Prediction predict(const std::string& session_id) = 0;
  virtual Prediction feedback(const std::string& session_id, const std::string& prefix, std::size_t typed_len,
                              bool moved_pointer, bool complete) = 0;
  virtual SessionReport validate(const std::string& session_id, bool learn) = 0;
};

class InProcessClient : public ProtocolClient {
 public:
  explicit InProcessClient(InteractiveService& service) : service_(service) {}
  StartResult start_session(const std::string& task_id, const std::string& sample_id,
                            const std::string& split) override;
  Prediction predict(const std::string& session_id) override;
  Prediction feedback(const std::string& session_id, const std::string& prefix, std::size_t typed_len,
                      bool moved_pointer, bool complete) override;
  SessionReport validate(const std::string& session_id, bool learn) override;

 private:
  InteractiveService& service_;
};

struct SimulationOptions {
  std::size_t burst = 1;  // characters typed per correction
  bool learn = false;
};

struct SimulationRow {
  std::string sample_id;
  std::size_t iterations = 0;
  std::size_t keystrokes = 0;
  std::size_t mouse_actions = 0;
  double ksmr = 0.0;
  bool converged = false;
  std::size_t reference_length = 0;  // scalars
  std::string final_text;
  std::vector<std::string> prefixes;
};

// Plays a user who reads the hypothesis left to right and corrects the first
// character that differs from `reference`, until they agree. A hypothesis
// that runs past the reference is cut with a complete-prefix request. Gives up
// (converged = false) after len(reference) + 1 corrections.
SimulationRow simulate_sample(ProtocolClient& client, const std::string& task_id, const std::string& split,
                              const std::string& sample_id, const std::string& reference,
                              const SimulationOptions& options);

struct SimulationSummary {
  std::vector<SimulationRow> rows;
  double mean_ksmr = 0.0;
  double first_half_ksmr = 0.0;
  double second_half_ksmr = 0.0;
  double converged_fraction = 0.0;
  double retype_ksmr = 0.0;  // mean of (len + 1) / len
};

using ClientFactory = std::function<std::unique_ptr<ProtocolClient>()>;

// Samples are ids "0".."n-1" of `split`. With parallel > 1, samples are
// processed by that many workers (each with its own client); rows keep
// sample order. Learning requires parallel == 1.
SimulationSummary simulate_corpus(const ClientFactory& make_client, const std::string& task_id,
                                  const std::string& split, const std::vector<std::string>& references,
                                  const SimulationOptions& options, std::size_t parallel = 1);

// sample_id, iterations, keystrokes, mouse_actions, ksmr, converged
void write_report(std::ostream& out, const std::vector<SimulationRow>& rows);

}  // namespace ipseq
