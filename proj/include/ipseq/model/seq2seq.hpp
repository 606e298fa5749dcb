#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ipseq/data/task_manifest.hpp"
#include "ipseq/data/vocabulary.hpp"
#include "ipseq/numerics/graph.hpp"
#include "ipseq/numerics/param_store.hpp"

namespace ipseq {

struct ModelConfig {
  std::size_t src_vocab_size = 0;  // unused for the feature modality
  std::size_t tgt_vocab_size = 0;
  std::size_t embedding_dim = 16;
  std::size_t encoder_hidden_dim = 16;
  std::size_t decoder_hidden_dim = 16;
  std::size_t attention_dim = 16;
  Modality input_modality = Modality::kText;
  std::size_t feature_dim = 0;  // required iff modality == features
  std::size_t max_output_len = 120;

  std::size_t annotation_dim() const { return 2 * encoder_hidden_dim; }
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Token ids (text) or a T x feature_dim matrix (image: T = 1, video: T frames).
using SourceObject = std::variant<std::vector<TokenId>, Tensor>;

struct EncodedSource {
  Tensor annotations;    // T x annotation_dim
  Tensor keys;           // T x attention_dim, annotations projected for attention
  Tensor initial_state;  // 1 x decoder_hidden_dim

  std::size_t length() const { return annotations.rows(); }
};

struct DecoderState {
  Tensor hidden;  // 1 x decoder_hidden_dim
  TokenId previous = kBosId;
};

struct StepOutput {
  std::vector<double> logprobs;  // over the target vocabulary
  DecoderState next;             // `previous` left as the input token; callers set it
  std::vector<double> attention;
};

// Graph handles for the encoder outputs, shared by inference and training so
// both paths run identical arithmetic.
struct EncodedVars {
  Var annotations;
  Var keys;
  Var initial_state;
};

struct StepVars {
  Var logprobs;
  Var hidden;
  Var attention;
};

// Attention encoder-decoder.
//
// Text sources go through a bidirectional GRU whose per-position states are
// concatenated; feature sources get an affine + tanh projection to the same
// width. The decoder is a conditional GRU: GRU1 consumes the previous target
// embedding, its state queries additive attention over the annotations, and
// GRU2 consumes the resulting context. The next-token distribution is a
// softmax over a tanh layer fed by the GRU2 state, context and embedding.
class Seq2Seq {
 public:
  Seq2Seq() = default;
  // Weights uniform in [-0.08, 0.08] from `seed`, biases zero.
  Seq2Seq(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  // Overwrites every parameter (biases included) with U(-scale, scale).
  void randomize(std::uint64_t seed, double scale);

  EncodedSource encode_text(std::span<const TokenId> token_ids) const;
  EncodedSource encode_features(const Tensor& feature_rows) const;
  EncodedSource encode(const SourceObject& source) const;

  DecoderState initial_state(const EncodedSource& encoded) const;
  StepOutput decoder_step(const DecoderState& state, const EncodedSource& encoded) const;

  // Sum of teacher-forced step log-probabilities. `target` must be non-empty
  // and end with EOS.
  double sequence_logprob(const SourceObject& source, std::span<const TokenId> target) const;

  // Graph builders.
  EncodedVars build_encoder(Graph& g, const SourceObject& source) const;
  EncodedVars bind_encoded(Graph& g, const EncodedSource& encoded) const;
  StepVars build_step(Graph& g, Var hidden, TokenId previous, const EncodedVars& enc) const;
  // 1x1 node holding the sequence log-probability.
  Var build_sequence_logprob(Graph& g, const EncodedVars& enc, std::span<const TokenId> target) const;

 private:
  Var gru(Graph& g, const std::string& prefix, Var x, Var h) const;
  void check_source(const SourceObject& source) const;

  ModelConfig config_;
  ParamStore params_;
};

}  // namespace ipseq
