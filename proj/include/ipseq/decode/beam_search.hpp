#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipseq/data/tokenizer.hpp"
#include "ipseq/model/seq2seq.hpp"

namespace ipseq {

struct Hypothesis {
  std::vector<TokenId> token_ids;  // after BOS; ends with EOS unless capped
  double logprob = 0.0;            // sum of step log-probabilities
  double score = 0.0;              // ranking score (logprob, or logprob / length)
  std::string surface;
  bool spliced = false;  // built by the fallback path; surface keeps the prefix verbatim
};

// A character prefix split into the longest-match token decomposition and the
// characters left over. `residual` holds the exact remaining characters,
// including a leading word separator in word mode, so that
// detokenize(forced_token_ids) + residual == raw_prefix.
struct PrefixConstraint {
  std::string raw_prefix;
  std::vector<TokenId> forced_token_ids;
  std::string residual;
  // The prefix is the whole output: EOS must follow it without overshoot.
  bool complete = false;

  bool empty() const { return raw_prefix.empty() && !complete; }
};

enum class LengthNormalization { kNone, kDivideByLength };

std::string_view to_string(LengthNormalization n);
LengthNormalization length_normalization_from_string(std::string_view name);

struct BeamParams {
  std::size_t beam_width = 5;
  std::size_t max_len = 120;  // output tokens, EOS included
  LengthNormalization length_normalization = LengthNormalization::kNone;

  void validate() const;
};

PrefixConstraint make_constraint(std::string_view raw_prefix, const Tokenizer& tokenizer, bool complete = false);

struct CompatibleToken {
  TokenId id;
  std::size_t consumed;  // bytes of `remaining` matched
  bool releases;         // the whole remainder is covered by this token
};

// Tokens whose continuation is a prefix of `remaining` (consume it and keep the
// constraint) or of which `remaining` is a prefix (release the constraint).
// With `exact`, only tokens that stay within `remaining` are allowed. Ordered by
// id. `first` selects the continuation form of a sentence-initial token.
std::vector<CompatibleToken> compatible_mask(std::string_view remaining, const Tokenizer& tokenizer, bool first,
                                             bool exact = false);

// Ranked best-first; ties go to the lexicographically smaller token sequence.
std::vector<Hypothesis> beam_search(const Seq2Seq& model, const Tokenizer& target, const EncodedSource& encoded,
                                    const BeamParams& params);

// Every returned surface starts with constraint.raw_prefix. When no token path
// can realize the prefix, the result is a single spliced hypothesis.
std::vector<Hypothesis> constrained_beam_search(const Seq2Seq& model, const Tokenizer& target,
                                                const EncodedSource& encoded, const PrefixConstraint& constraint,
                                                const BeamParams& params);

// Assembles the fallback hypothesis: `tokens` = forced ids, UNK for a
// non-empty residual, then the freely generated suffix.
Hypothesis splice_fallback(const PrefixConstraint& constraint, const Tokenizer& target, std::vector<TokenId> tokens,
                           std::size_t suffix_begin, double logprob);

}  // namespace ipseq
