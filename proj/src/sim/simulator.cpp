#include "ipseq/sim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "ipseq/data/text.hpp"

namespace ipseq {

StartResult InProcessClient::start_session(const std::string& task_id, const std::string& sample_id,
                                           const std::string& split) {
  return service_.start_session(task_id, sample_id, split);
}

Prediction InProcessClient::predict(const std::string& session_id) { return service_.predict(session_id); }

Prediction InProcessClient::feedback(const std::string& session_id, const std::string& prefix, std::size_t typed_len,
                                     bool moved_pointer, bool complete) {
  return service_.feedback(session_id, prefix, typed_len, moved_pointer, complete);
}

SessionReport InProcessClient::validate(const std::string& session_id, bool learn) {
  return service_.validate(session_id, learn).report;
}

SimulationRow simulate_sample(ProtocolClient& client, const std::string& task_id, const std::string& split,
                              const std::string& sample_id, const std::string& reference,
                              const SimulationOptions& options) {
  if (options.burst < 1) throw std::invalid_argument("burst must be >= 1");
  const auto ref = to_scalars(normalize(reference));
  if (ref.empty()) throw std::invalid_argument("empty reference for sample " + sample_id);

  SimulationRow row;
  row.sample_id = sample_id;
  row.reference_length = ref.size();
  const auto session = client.start_session(task_id, sample_id, split).session_id;
  auto hyp = to_scalars(client.predict(session).text);

  std::optional<std::size_t> caret;  // end of the previous correction
  while (hyp != ref && row.prefixes.size() <= ref.size()) {
    const auto mismatch = std::mismatch(hyp.begin(), hyp.end(), ref.begin(), ref.end());
    const auto i = static_cast<std::size_t>(mismatch.second - ref.begin());
    std::size_t typed = 0;
    bool complete = true;
    if (i < ref.size()) {
      typed = std::min(options.burst, ref.size() - i);
      complete = i + typed == ref.size();
    }
    const auto prefix = from_scalars(std::u32string_view(ref).substr(0, i + typed));
    const bool moved = caret != i;
    hyp = to_scalars(client.feedback(session, prefix, typed, moved, complete).text);
    caret = i + typed;
    row.prefixes.push_back(prefix);
  }

  const auto report = client.validate(session, options.learn);
  row.iterations = report.effort.iterations;
  row.keystrokes = report.effort.keystrokes;
  row.mouse_actions = report.effort.mouse_actions;
  row.ksmr = report.ksmr;
  row.final_text = report.final_text;
  row.converged = to_scalars(report.final_text) == ref;
  return row;
}

SimulationSummary simulate_corpus(const ClientFactory& make_client, const std::string& task_id,
                                  const std::string& split, const std::vector<std::string>& references,
                                  const SimulationOptions& options, std::size_t parallel) {
  if (parallel < 1) throw std::invalid_argument("parallel must be >= 1");
  if (parallel > 1 && options.learn) throw std::invalid_argument("parallel simulation requires learning disabled");
  SimulationSummary out;
  out.rows.resize(references.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      auto client = make_client();
      for (std::size_t i = next++; i < references.size(); i = next++) {
        out.rows[i] = simulate_sample(*client, task_id, split, std::to_string(i), references[i], options);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = references.size();
    }
  };
  if (parallel == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < parallel; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  const auto n = out.rows.size();
  if (n == 0) return out;
  std::size_t converged = 0;
  double first = 0.0, second = 0.0;
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = out.rows[i];
    out.mean_ksmr += r.ksmr;
    out.retype_ksmr += static_cast<double>(r.reference_length + 1) / static_cast<double>(r.reference_length);
    converged += r.converged ? 1 : 0;
    (i < half ? first : second) += r.ksmr;
  }
  out.mean_ksmr /= static_cast<double>(n);
  out.retype_ksmr /= static_cast<double>(n);
  out.converged_fraction = static_cast<double>(converged) / static_cast<double>(n);
  out.first_half_ksmr = half ? first / static_cast<double>(half) : 0.0;
  out.second_half_ksmr = second / static_cast<double>(n - half);
  return out;
}

void write_report(std::ostream& out, const std::vector<SimulationRow>& rows) {
  out << "sample_id\titerations\tkeystrokes\tmouse_actions\tksmr\tconverged\n";
  out.precision(6);
  for (const auto& r : rows) {
    out << r.sample_id << '\t' << r.iterations << '\t' << r.keystrokes << '\t' << r.mouse_actions << '\t' << std::fixed
        << r.ksmr << std::defaultfloat << '\t' << (r.converged ? "true" : "false") << '\n';
  }
}

}  // namespace ipseq
