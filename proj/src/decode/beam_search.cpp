#include "ipseq/decode/beam_search.hpp"

#include <algorithm>
#include <stdexcept>

namespace ipseq {

std::string_view to_string(LengthNormalization n) {
  return n == LengthNormalization::kNone ? "none" : "divide-by-length";
}

LengthNormalization length_normalization_from_string(std::string_view name) {
  if (name == "none") return LengthNormalization::kNone;
  if (name == "divide-by-length") return LengthNormalization::kDivideByLength;
  throw std::invalid_argument("unknown length normalization: " + std::string(name));
}

void BeamParams::validate() const {
  if (beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
}

PrefixConstraint make_constraint(std::string_view raw_prefix, const Tokenizer& tokenizer, bool complete) {
  PrefixConstraint c;
  c.raw_prefix = std::string(raw_prefix);
  c.complete = complete;
  std::size_t pos = 0;
  const auto n = static_cast<TokenId>(tokenizer.vocab().size());
  while (pos < raw_prefix.size()) {
    const auto rest = raw_prefix.substr(pos);
    const bool first = c.forced_token_ids.empty();
    TokenId best = kUnkId;
    std::size_t best_len = 0;
    for (TokenId id = kFirstContentId; id < n; ++id) {
      const auto s = tokenizer.continuation(id, first);
      if (s.size() > best_len && rest.starts_with(s)) {
        best = id;
        best_len = s.size();
      }
    }
    if (best_len == 0) break;
    c.forced_token_ids.push_back(best);
    pos += best_len;
  }
  c.residual = std::string(raw_prefix.substr(pos));
  return c;
}

std::vector<CompatibleToken> compatible_mask(std::string_view remaining, const Tokenizer& tokenizer, bool first,
                                             bool exact) {
  std::vector<CompatibleToken> out;
  const auto n = static_cast<TokenId>(tokenizer.vocab().size());
  for (TokenId id = kFirstContentId; id < n; ++id) {
    const auto s = tokenizer.continuation(id, first);
    if (s.empty()) continue;
    if (remaining.starts_with(s)) {
      out.push_back({id, s.size(), s.size() == remaining.size()});
    } else if (!exact && std::string_view(s).starts_with(remaining)) {
      out.push_back({id, remaining.size(), true});
    }
  }
  return out;
}

Hypothesis splice_fallback(const PrefixConstraint& constraint, const Tokenizer& target, std::vector<TokenId> tokens,
                           std::size_t suffix_begin, double logprob) {
  std::string suffix;
  for (std::size_t i = suffix_begin; i < tokens.size() && tokens[i] != kEosId; ++i) {
    suffix += target.continuation(tokens[i], false);
  }
  const auto& p = constraint.raw_prefix;
  if (target.mode() == TokenMode::kWord && suffix.starts_with(' ') && (p.empty() || p.back() == ' ')) {
    suffix.erase(0, 1);
  }
  Hypothesis h;
  h.token_ids = std::move(tokens);
  h.logprob = logprob;
  h.score = logprob;
  h.surface = p + suffix;
  h.spliced = true;
  return h;
}

namespace {

struct Live {
  std::vector<TokenId> tokens;
  double logprob = 0.0;
  DecoderState state;
  std::string remaining;  // prefix characters still to be produced
  bool released = true;   // no constraint left (EOS and every content token allowed)
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double logprob;
  std::size_t consumed;
  bool released;
};

struct SearchSpec {
  std::size_t beam_width;
  std::size_t max_len;
  LengthNormalization norm;
  bool complete;  // once the constraint is consumed, only EOS may follow
};

double ranking_score(double logprob, std::size_t length, LengthNormalization norm) {
  return norm == LengthNormalization::kNone ? logprob : logprob / static_cast<double>(length);
}

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.token_ids < b.token_ids;
}

std::vector<Hypothesis> search(const Seq2Seq& model, const Tokenizer& target, const EncodedSource& encoded,
                               Live start, const SearchSpec& spec) {
  const auto vocab_size = static_cast<TokenId>(target.vocab().size());
  std::vector<Live> beam;
  beam.push_back(std::move(start));
  std::vector<Hypothesis> finished;

  auto finish = [&](std::vector<TokenId> tokens, double logprob) {
    Hypothesis h;
    h.surface = target.detokenize(tokens);
    h.score = ranking_score(logprob, tokens.size(), spec.norm);
    h.token_ids = std::move(tokens);
    h.logprob = logprob;
    finished.push_back(std::move(h));
  };

  while (!beam.empty()) {
    std::vector<Candidate> candidates;
    std::vector<DecoderState> next_states(beam.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      const Live& h = beam[i];
      StepOutput out = model.decoder_step(h.state, encoded);
      next_states[i] = std::move(out.next);
      const auto& lp = out.logprobs;
      if (h.released) {
        candidates.push_back({i, kEosId, h.logprob + lp[kEosId], 0, true});
        for (TokenId t = kFirstContentId; t < vocab_size; ++t) candidates.push_back({i, t, h.logprob + lp[t], 0, true});
      } else if (h.remaining.empty()) {
        candidates.push_back({i, kEosId, h.logprob + lp[kEosId], 0, false});
      } else {
        for (const auto& c : compatible_mask(h.remaining, target, h.tokens.empty(), spec.complete)) {
          candidates.push_back({i, c.id, h.logprob + lp[c.id], c.consumed, c.releases && !spec.complete});
        }
      }
    }
    if (candidates.empty()) break;

    auto order = [&](const Candidate& a, const Candidate& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      const auto& pa = beam[a.parent].tokens;
      const auto& pb = beam[b.parent].tokens;
      if (pa != pb) return pa < pb;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(spec.beam_width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      order);

    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = candidates[k];
      const Live& parent = beam[c.parent];
      auto tokens = parent.tokens;
      tokens.push_back(c.token);
      if (c.token == kEosId) {
        finish(std::move(tokens), c.logprob);
        continue;
      }
      if (tokens.size() >= spec.max_len) {
        // Capped without EOS; only kept when the prefix has been fully produced.
        if (c.released) finish(std::move(tokens), c.logprob);
        continue;
      }
      Live child;
      child.tokens = std::move(tokens);
      child.logprob = c.logprob;
      child.state = DecoderState{next_states[c.parent].hidden, c.token};
      child.released = c.released;
      if (!c.released) child.remaining = parent.remaining.substr(c.consumed);
      next.push_back(std::move(child));
    }
    beam = std::move(next);

    if (spec.norm == LengthNormalization::kNone && finished.size() >= spec.beam_width && !beam.empty()) {
      std::vector<double> scores;
      for (const auto& f : finished) scores.push_back(f.score);
      std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(spec.beam_width - 1), scores.end(),
                       std::greater<>());
      const double kth = scores[spec.beam_width - 1];
      double best_live = beam.front().logprob;
      for (const auto& h : beam) best_live = std::max(best_live, h.logprob);
      // Scores only decrease, so no live descendant can enter the top list.
      if (best_live < kth) break;
    }
  }

  std::sort(finished.begin(), finished.end(), better);
  if (finished.size() > spec.beam_width) finished.resize(spec.beam_width);
  return finished;
}

Live root(const Seq2Seq& model, const EncodedSource& encoded) {
  Live h;
  h.state = model.initial_state(encoded);
  return h;
}

// Feeds `token` and accumulates its log-probability.
void advance(const Seq2Seq& model, const EncodedSource& encoded, Live& h, TokenId token) {
  StepOutput out = model.decoder_step(h.state, encoded);
  h.logprob += out.logprobs[token];
  h.state = DecoderState{std::move(out.next.hidden), token};
  h.tokens.push_back(token);
}

}  // namespace

std::vector<Hypothesis> beam_search(const Seq2Seq& model, const Tokenizer& target, const EncodedSource& encoded,
                                    const BeamParams& params) {
  params.validate();
  return search(model, target, encoded, root(model, encoded),
                {params.beam_width, params.max_len, params.length_normalization, false});
}

std::vector<Hypothesis> constrained_beam_search(const Seq2Seq& model, const Tokenizer& target,
                                                const EncodedSource& encoded, const PrefixConstraint& constraint,
                                                const BeamParams& params) {
  params.validate();
  const SearchSpec spec{params.beam_width, params.max_len, params.length_normalization, constraint.complete};
  Live start = root(model, encoded);
  start.remaining = constraint.raw_prefix;
  start.released = constraint.empty();
  auto result = search(model, target, encoded, std::move(start), spec);
  if (!result.empty()) return result;

  Live h = root(model, encoded);
  for (TokenId t : constraint.forced_token_ids) advance(model, encoded, h, t);
  if (!constraint.residual.empty()) advance(model, encoded, h, kUnkId);
  const std::size_t suffix_begin = h.tokens.size();
  std::vector<TokenId> tokens;
  double logprob = h.logprob;
  if (constraint.complete) {
    advance(model, encoded, h, kEosId);
    tokens = h.tokens;
    logprob = h.logprob;
  } else {
    SearchSpec free = spec;
    free.max_len = std::max(spec.max_len, suffix_begin + 1);
    auto cont = search(model, target, encoded, std::move(h), free);
    tokens = std::move(cont.front().token_ids);
    logprob = cont.front().logprob;
  }
  Hypothesis out = splice_fallback(constraint, target, std::move(tokens), suffix_begin, logprob);
  out.score = ranking_score(out.logprob, out.token_ids.size(), params.length_normalization);
  return {std::move(out)};
}

}  // namespace ipseq
