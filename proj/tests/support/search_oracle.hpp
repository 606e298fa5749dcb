#pragma once

// Exhaustive enumeration over every output sequence of a tiny model, used as
// the reference argmax for beam-search tests.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ipseq/data/tokenizer.hpp"
#include "ipseq/model/seq2seq.hpp"

namespace ipseq::oracle {

struct Scored {
  std::vector<TokenId> tokens;
  double logprob;
};

// All sequences over content tokens + EOS of length <= max_len that either end
// in EOS or reach max_len, with their model log-probabilities.
inline std::vector<Scored> enumerate(const Seq2Seq& model, const EncodedSource& enc, std::size_t max_len) {
  const auto v = static_cast<TokenId>(model.config().tgt_vocab_size);
  std::vector<Scored> out;
  std::vector<TokenId> path;
  std::function<void(const DecoderState&, double)> walk = [&](const DecoderState& state, double lp) {
    StepOutput step = model.decoder_step(state, enc);
    path.push_back(kEosId);
    out.push_back({path, lp + step.logprobs[kEosId]});
    path.pop_back();
    for (TokenId t = kFirstContentId; t < v; ++t) {
      path.push_back(t);
      if (path.size() == max_len) {
        out.push_back({path, lp + step.logprobs[t]});
      } else {
        walk(DecoderState{step.next.hidden, t}, lp + step.logprobs[t]);
      }
      path.pop_back();
    }
  };
  walk(model.initial_state(enc), 0.0);
  return out;
}

// Highest score, ties to the lexicographically smaller sequence. `keep` filters.
inline const Scored* argmax(const std::vector<Scored>& all, const std::function<bool(const Scored&)>& keep) {
  const Scored* best = nullptr;
  for (const auto& s : all) {
    if (!keep(s)) continue;
    if (!best || s.logprob > best->logprob || (s.logprob == best->logprob && s.tokens < best->tokens)) best = &s;
  }
  return best;
}

inline ModelConfig tiny_config(std::size_t src_vocab, std::size_t tgt_vocab, std::size_t dim) {
  ModelConfig c;
  c.src_vocab_size = src_vocab;
  c.tgt_vocab_size = tgt_vocab;
  c.embedding_dim = c.encoder_hidden_dim = c.decoder_hidden_dim = c.attention_dim = dim;
  return c;
}

// A model with weights spread wide enough that output distributions are far
// from uniform.
inline Seq2Seq random_model(std::size_t src_vocab, std::size_t tgt_vocab, std::size_t dim, std::uint64_t seed,
                            double scale = 1.0) {
  Seq2Seq m(tiny_config(src_vocab, tgt_vocab, dim), seed);
  m.randomize(seed * 7919 + 1, scale);
  return m;
}

inline std::vector<TokenId> random_source(std::mt19937_64& rng, std::size_t src_vocab, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<TokenId> tok(kFirstContentId, static_cast<TokenId>(src_vocab - 1));
  std::vector<TokenId> ids(len(rng));
  for (auto& t : ids) t = tok(rng);
  return ids;
}

}  // namespace ipseq::oracle
