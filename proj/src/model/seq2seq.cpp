#include "ipseq/model/seq2seq.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ipseq {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw std::invalid_argument(std::string("model config: ") + what + " must be >= 1");
  };
  if (input_modality == Modality::kText) positive(src_vocab_size, "src_vocab_size");
  positive(tgt_vocab_size, "tgt_vocab_size");
  positive(embedding_dim, "embedding_dim");
  positive(encoder_hidden_dim, "encoder_hidden_dim");
  positive(decoder_hidden_dim, "decoder_hidden_dim");
  positive(attention_dim, "attention_dim");
  positive(max_output_len, "max_output_len");
  if (input_modality == Modality::kFeatures) positive(feature_dim, "feature_dim");
  if (tgt_vocab_size <= kFirstContentId) {
    throw std::invalid_argument("model config: target vocabulary has no content tokens");
  }
}

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Tensor weight(std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = u(rng_);
    return Tensor({rows, cols}, std::move(v));
  }

 private:
  std::mt19937_64 rng_;
};

void add_gru(ParamStore& ps, Initializer& init, const std::string& prefix, std::size_t in, std::size_t hidden) {
  for (const char* gate : {"z", "r", "h"}) {
    ps.add(prefix + ".W" + gate, init.weight(in, hidden));
    ps.add(prefix + ".U" + gate, init.weight(hidden, hidden));
    ps.add(prefix + ".b" + gate, Tensor::zeros({1, hidden}));
  }
}

}  // namespace

Seq2Seq::Seq2Seq(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Initializer init(seed);
  const auto E = config_.embedding_dim, H = config_.encoder_hidden_dim, D = config_.decoder_hidden_dim,
             A = config_.attention_dim, C = config_.annotation_dim(), V = config_.tgt_vocab_size;

  if (config_.input_modality == Modality::kText) {
    params_.add("src_embed", init.weight(config_.src_vocab_size, E));
    add_gru(params_, init, "enc_fwd", E, H);
    add_gru(params_, init, "enc_bwd", E, H);
  } else {
    params_.add("feat.W", init.weight(config_.feature_dim, C));
    params_.add("feat.b", Tensor::zeros({1, C}));
  }
  params_.add("init.W", init.weight(C, D));
  params_.add("init.b", Tensor::zeros({1, D}));
  params_.add("tgt_embed", init.weight(V, E));
  add_gru(params_, init, "dec1", E, D);
  params_.add("att.W", init.weight(C, A));
  params_.add("att.U", init.weight(D, A));
  params_.add("att.v", init.weight(1, A));
  add_gru(params_, init, "dec2", C, D);
  params_.add("out.Ws", init.weight(D, E));
  params_.add("out.Wc", init.weight(C, E));
  params_.add("out.We", init.weight(E, E));
  params_.add("out.b", Tensor::zeros({1, E}));
  params_.add("out.Wv", init.weight(E, V));
  params_.add("out.bv", Tensor::zeros({1, V}));
}

void Seq2Seq::randomize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& e : params_.entries()) {
    for (auto& v : e.value.mutable_data()) v = u(rng);
  }
}

void Seq2Seq::check_source(const SourceObject& source) const {
  if (const auto* ids = std::get_if<std::vector<TokenId>>(&source)) {
    if (config_.input_modality != Modality::kText) throw std::invalid_argument("model expects feature sources");
    if (ids->empty()) throw std::invalid_argument("encode_text: empty source");
    for (auto id : *ids) {
      if (id >= config_.src_vocab_size) {
        throw std::out_of_range("encode_text: token id " + std::to_string(id) + " >= source vocabulary size " +
                                std::to_string(config_.src_vocab_size));
      }
    }
  } else {
    const auto& f = std::get<Tensor>(source);
    if (config_.input_modality != Modality::kFeatures) throw std::invalid_argument("model expects text sources");
    if (f.rank() != 2 || f.cols() != config_.feature_dim) {
      throw ShapeError("encode_features", {f.shape(), Shape{0, config_.feature_dim}});
    }
  }
}

Var Seq2Seq::gru(Graph& g, const std::string& p, Var x, Var h) const {
  auto gate = [&](const char* k, Var hh) {
    return g.add(g.add(g.matmul(x, g.param(p + ".W" + k)), g.matmul(hh, g.param(p + ".U" + k))),
                 g.param(p + ".b" + k));
  };
  Var z = g.sigmoid(gate("z", h));
  Var r = g.sigmoid(gate("r", h));
  Var candidate = g.tanh(gate("h", g.mul(r, h)));
  Var keep = g.add(g.mul(z, g.constant(-1.0)), g.constant(1.0));
  return g.add(g.mul(keep, h), g.mul(z, candidate));
}

EncodedVars Seq2Seq::build_encoder(Graph& g, const SourceObject& source) const {
  check_source(source);
  Var annotations;
  if (const auto* ids = std::get_if<std::vector<TokenId>>(&source)) {
    const std::size_t T = ids->size();
    Var table = g.param("src_embed");
    std::vector<Var> x(T);
    for (std::size_t t = 0; t < T; ++t) x[t] = g.lookup(table, {(*ids)[t]});
    const Var zero = g.input("", Tensor::zeros({1, config_.encoder_hidden_dim}));
    std::vector<Var> fwd(T), bwd(T);
    Var h = zero;
    for (std::size_t t = 0; t < T; ++t) fwd[t] = h = gru(g, "enc_fwd", x[t], h);
    h = zero;
    for (std::size_t t = T; t-- > 0;) bwd[t] = h = gru(g, "enc_bwd", x[t], h);
    std::vector<Var> rows(T);
    for (std::size_t t = 0; t < T; ++t) {
      Var pair[] = {fwd[t], bwd[t]};
      rows[t] = g.concat(pair, 1);
    }
    annotations = T == 1 ? rows[0] : g.concat(rows, 0);
  } else {
    Var f = g.input("", std::get<Tensor>(source));
    annotations = g.tanh(g.add(g.matmul(f, g.param("feat.W")), g.param("feat.b")));
  }
  const std::size_t T = g.shape(annotations)[0];
  Var averager = g.input("", Tensor::filled({1, T}, 1.0 / static_cast<double>(T)));
  Var mean = g.matmul(averager, annotations);
  Var init = g.tanh(g.add(g.matmul(mean, g.param("init.W")), g.param("init.b")));
  Var keys = g.matmul(annotations, g.param("att.W"));
  return {annotations, keys, init};
}

EncodedVars Seq2Seq::bind_encoded(Graph& g, const EncodedSource& e) const {
  return {g.input("annotations", e.annotations), g.input("keys", e.keys), g.input("initial_state", e.initial_state)};
}

StepVars Seq2Seq::build_step(Graph& g, Var hidden, TokenId previous, const EncodedVars& enc) const {
  if (previous >= config_.tgt_vocab_size) throw std::out_of_range("decoder: previous token out of range");
  Var e = g.lookup(g.param("tgt_embed"), {previous});
  Var s1 = gru(g, "dec1", e, hidden);
  Var query = g.matmul(s1, g.param("att.U"));
  Var energy = g.tanh(g.add(enc.keys, query));
  Var scores = g.matmul(g.param("att.v"), energy, /*transpose_b=*/true);
  Var alpha = g.softmax(scores);
  Var context = g.matmul(alpha, enc.annotations);
  Var s2 = gru(g, "dec2", context, s1);
  Var pre = g.add(g.matmul(s2, g.param("out.Ws")), g.matmul(context, g.param("out.Wc")));
  pre = g.add(g.add(pre, g.matmul(e, g.param("out.We"))), g.param("out.b"));
  Var logits = g.add(g.matmul(g.tanh(pre), g.param("out.Wv")), g.param("out.bv"));
  return {g.log(g.softmax(logits)), s2, alpha};
}

Var Seq2Seq::build_sequence_logprob(Graph& g, const EncodedVars& enc, std::span<const TokenId> target) const {
  if (target.empty()) throw std::invalid_argument("sequence_logprob: empty target");
  if (target.back() != kEosId) throw std::invalid_argument("sequence_logprob: target must end with EOS");
  Var hidden = enc.initial_state;
  TokenId previous = kBosId;
  Var total;
  for (TokenId t : target) {
    if (t >= config_.tgt_vocab_size) throw std::out_of_range("sequence_logprob: target token out of range");
    StepVars step = build_step(g, hidden, previous, enc);
    auto onehot = Tensor::zeros({1, config_.tgt_vocab_size});
    onehot[t] = 1.0;
    Var pick = g.sum(g.mul(step.logprobs, g.input("", std::move(onehot))));
    total = total.valid() ? g.add(total, pick) : pick;
    hidden = step.hidden;
    previous = t;
  }
  return total;
}

EncodedSource Seq2Seq::encode(const SourceObject& source) const {
  Graph g(&params_);
  EncodedVars v = build_encoder(g, source);
  g.forward();
  return {g.value(v.annotations), g.value(v.keys), g.value(v.initial_state)};
}

EncodedSource Seq2Seq::encode_text(std::span<const TokenId> token_ids) const {
  return encode(SourceObject(std::vector<TokenId>(token_ids.begin(), token_ids.end())));
}

EncodedSource Seq2Seq::encode_features(const Tensor& feature_rows) const { return encode(SourceObject(feature_rows)); }

DecoderState Seq2Seq::initial_state(const EncodedSource& encoded) const {
  return DecoderState{encoded.initial_state, kBosId};
}

StepOutput Seq2Seq::decoder_step(const DecoderState& state, const EncodedSource& encoded) const {
  if (!state.hidden.all_finite()) throw std::domain_error("decoder_step: non-finite state");
  Graph g(&params_);
  EncodedVars enc = bind_encoded(g, encoded);
  StepVars step = build_step(g, g.input("hidden", state.hidden), state.previous, enc);
  g.forward();
  StepOutput out;
  const auto lp = g.value(step.logprobs).data();
  out.logprobs.assign(lp.begin(), lp.end());
  for (double v : out.logprobs) {
    if (std::isnan(v) || v > 0.0) throw std::domain_error("decoder_step: invalid log-probability");
  }
  out.next = DecoderState{g.value(step.hidden), state.previous};
  if (!out.next.hidden.all_finite()) throw std::domain_error("decoder_step: non-finite state");
  const auto a = g.value(step.attention).data();
  out.attention.assign(a.begin(), a.end());
  return out;
}

double Seq2Seq::sequence_logprob(const SourceObject& source, std::span<const TokenId> target) const {
  Graph g(&params_);
  EncodedVars enc = build_encoder(g, source);
  Var total = build_sequence_logprob(g, enc, target);
  g.forward();
  return g.value(total)[0];
}

}  // namespace ipseq
