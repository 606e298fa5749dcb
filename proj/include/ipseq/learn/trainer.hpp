#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "ipseq/data/corpus.hpp"
#include "ipseq/data/tokenizer.hpp"
#include "ipseq/decode/beam_search.hpp"
#include "ipseq/model/checkpoint.hpp"
#include "ipseq/model/seq2seq.hpp"

namespace ipseq {

enum class OptimizerKind { kSgd, kAdadelta };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double learning_rate = 0.1;  // zero is legal and leaves everything untouched
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  double gradient_clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;
  double adadelta_rho = 0.95;
  double adadelta_epsilon = 1e-6;

  void validate() const;
};

struct TrainingPair {
  SourceObject source;
  std::vector<TokenId> target;  // ends with EOS
};

struct LossPoint {
  std::size_t epoch;  // 1-based
  std::size_t batch;  // 1-based within the epoch
  double loss;        // per-token negative log-likelihood before the step
};

void write_loss_curve(std::ostream& out, std::span<const LossPoint> curve);

// Per-token negative log-likelihood of the pairs: -sum(logprob) / sum(|target|).
double corpus_loss(const Seq2Seq& model, std::span<const TrainingPair> pairs);

// Accumulates d(loss)/d(params) into the model's gradient slots and returns the
// loss, where loss = -sum(logprob) / token_count.
double accumulate_gradients(Seq2Seq& model, const TrainingPair& pair, double token_count);

// Scales gradients so their global norm is at most `max_norm`. Returns the
// norm before clipping.
double clip_gradients(ParamStore& params, double max_norm);

// Applies one update from the gradients held in `params`. A zero learning rate
// is a no-op on parameters and optimizer state.
void optimizer_step(ParamStore& params, OptimizerState& state, const TrainConfig& config);

using ProgressFn = std::function<void(const LossPoint&)>;

std::vector<LossPoint> train(Seq2Seq& model, OptimizerState& state, std::span<const TrainingPair> corpus,
                             const TrainConfig& config, const ProgressFn& progress = {});

struct UpdateReport {
  double loss_before;
  double loss_after;
};

// One gradient step on a single validated sample. Target ids outside the
// vocabulary become UNK; EOS is appended when missing.
UpdateReport online_update(Seq2Seq& model, OptimizerState& state, const SourceObject& source,
                           std::vector<TokenId> target, const TrainConfig& config);

// Tokenizes a text corpus into training pairs.
std::vector<TrainingPair> make_pairs(const ParallelCorpus& corpus, const Tokenizer& source, const Tokenizer& target);

// Fraction of pairs whose top hypothesis equals the reference tokens.
double exact_match(const Seq2Seq& model, const Tokenizer& target, std::span<const TrainingPair> pairs,
                   const BeamParams& params);

}  // namespace ipseq
