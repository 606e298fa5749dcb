#include <cmath>
#include <random>

#include "../support/search_oracle.hpp"
#include "doctest.h"
#include "ipseq/decode/beam_search.hpp"

using namespace ipseq;

namespace {

const Tokenizer kChars(TokenMode::kChar, Vocabulary({"a", "b", " ", "c"}));
const Tokenizer kWords(TokenMode::kWord, Vocabulary({"a", "b", "ab", "."}));

BeamParams exhaustive(std::size_t max_len) {
  BeamParams p;
  p.beam_width = 1u << 20;
  p.max_len = max_len;
  return p;
}

std::string random_prefix(std::mt19937_64& rng, std::string_view alphabet, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, alphabet.size() - 1);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("make_constraint") {
  const Tokenizer words(TokenMode::kWord, Vocabulary({"A", "football", "player", "in", "red"}));
  SUBCASE("word-level mid-word cut") {
    auto c = make_constraint("A f", words);
    REQUIRE(c.forced_token_ids.size() == 1);
    CHECK(words.vocab().surface(c.forced_token_ids[0]) == "A");
    // The separator belongs to the unmatched remainder.
    CHECK(c.residual == " f");
  }
  SUBCASE("word-level complete words and trailing space") {
    auto c = make_constraint("A football ", words);
    CHECK(c.forced_token_ids.size() == 2);
    CHECK(c.residual == " ");
  }
  SUBCASE("character-level: every character is a token") {
    const Tokenizer chars(TokenMode::kChar, Vocabulary({"A", " ", "f"}));
    auto c = make_constraint("A f", chars);
    CHECK(c.forced_token_ids == std::vector<TokenId>{4, 5, 6});
    CHECK(c.residual.empty());
  }
  SUBCASE("longest match") {
    auto c = make_constraint("ab a", kWords);
    CHECK(c.forced_token_ids == std::vector<TokenId>{6, 4});
    CHECK(c.residual.empty());
  }
  SUBCASE("empty and unknown") {
    CHECK(make_constraint("", words).forced_token_ids.empty());
    CHECK(make_constraint("", words).empty());
    auto c = make_constraint("zq", words);
    CHECK(c.forced_token_ids.empty());
    CHECK(c.residual == "zq");
  }
  SUBCASE("detokenize(forced) + residual reproduces the prefix") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 500; ++i) {
      for (const Tokenizer* tok : {&kChars, &kWords}) {
        auto p = random_prefix(rng, "ab .cz", 8);
        auto c = make_constraint(p, *tok);
        CHECK(tok->detokenize(c.forced_token_ids) + c.residual == p);
      }
    }
  }
}

TEST_CASE("compatible_mask") {
  const Tokenizer tok(TokenMode::kWord, Vocabulary({"football", "f", "red"}));
  auto ids = [&](const std::vector<CompatibleToken>& m) {
    std::vector<std::string> s;
    for (const auto& c : m) s.push_back(tok.vocab().surface(c.id));
    return s;
  };
  auto m = compatible_mask("f", tok, true);
  CHECK(ids(m) == std::vector<std::string>{"football", "f"});
  CHECK(m[0].releases);
  CHECK(m[1].releases);

  m = compatible_mask("fo", tok, true);
  REQUIRE(ids(m) == std::vector<std::string>{"football", "f"});
  CHECK(m[0].releases);
  CHECK(m[1].consumed == 1);
  CHECK_FALSE(m[1].releases);

  CHECK(compatible_mask("zq", tok, true).empty());
  // After the first word a token brings its separator.
  CHECK(ids(compatible_mask(" f", tok, false)) == std::vector<std::string>{"football", "f"});
  CHECK(compatible_mask("f", tok, false).empty());
  CHECK(ids(compatible_mask("fo", tok, true, /*exact=*/true)) == std::vector<std::string>{"f"});
}

TEST_CASE("beam width 1 is greedy decoding") {
  std::mt19937_64 rng(2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = oracle::random_model(6, 8, 4, seed, 1.2);
    const Tokenizer tok(TokenMode::kChar, Vocabulary({"a", "b", "c", "d"}));
    auto enc = m.encode_text(oracle::random_source(rng, 6, 4));
    BeamParams p;
    p.beam_width = 1;
    p.max_len = 8;
    auto hyp = beam_search(m, tok, enc, p);
    REQUIRE(hyp.size() == 1);

    std::vector<TokenId> greedy;
    auto state = m.initial_state(enc);
    while (greedy.size() < p.max_len) {
      auto out = m.decoder_step(state, enc);
      TokenId best = kEosId;
      for (TokenId t = kFirstContentId; t < 8; ++t)
        if (out.logprobs[t] > out.logprobs[best]) best = t;
      greedy.push_back(best);
      if (best == kEosId) break;
      state = DecoderState{out.next.hidden, best};
    }
    CHECK(hyp[0].token_ids == greedy);
  }
}

TEST_CASE("top score equals the teacher-forced sequence log-probability") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = oracle::random_model(6, 8, 4, seed, 1.0);
    m.params().value("out.bv")[kEosId] = 2.0;  // terminate early
    auto src = oracle::random_source(rng, 6, 4);
    BeamParams p;
    p.beam_width = 3;
    p.max_len = 10;
    auto hyp = beam_search(m, kChars, m.encode_text(src), p);
    REQUIRE(!hyp.empty());
    if (hyp[0].token_ids.back() != kEosId) continue;
    CHECK(hyp[0].logprob == m.sequence_logprob(src, hyp[0].token_ids));
    CHECK(hyp[0].logprob <= 0.0);
    CHECK(hyp[0].surface == kChars.detokenize(hyp[0].token_ids));
  }
}

TEST_CASE("exhaustive width matches brute-force enumeration") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const Tokenizer& tok = trial % 2 ? kWords : kChars;
    const std::size_t max_len = 3 + trial % 3;
    auto m = oracle::random_model(6, 8, 3, 100 + trial, 1.5);
    auto enc = m.encode_text(oracle::random_source(rng, 6, 3));
    auto all = oracle::enumerate(m, enc, max_len);

    auto free = beam_search(m, tok, enc, exhaustive(max_len));
    CHECK(free.size() == all.size());
    auto best = oracle::argmax(all, [](const oracle::Scored&) { return true; });
    CHECK(free[0].token_ids == best->tokens);
    CHECK(std::abs(free[0].logprob - best->logprob) <= 1e-10);

    const std::string prefix = random_prefix(rng, "ab .", 3);
    auto constrained = constrained_beam_search(m, tok, enc, make_constraint(prefix, tok), exhaustive(max_len));
    auto cbest = oracle::argmax(all, [&](const oracle::Scored& s) { return tok.detokenize(s.tokens).starts_with(prefix); });
    INFO("prefix '" << prefix << "'");
    if (cbest) {
      CHECK_FALSE(constrained[0].spliced);
      CHECK(constrained[0].token_ids == cbest->tokens);
      CHECK(std::abs(constrained[0].logprob - cbest->logprob) <= 1e-10);
      CHECK(constrained[0].logprob <= free[0].logprob);
    } else {
      CHECK(constrained[0].spliced);
    }
    CHECK(constrained[0].surface.starts_with(prefix));
  }
}

TEST_CASE("constrained search") {
  auto m = oracle::random_model(6, 8, 4, 7, 1.0);
  auto enc = m.encode_text(std::vector<TokenId>{4, 5});
  BeamParams p;
  p.beam_width = 3;
  p.max_len = 12;

  SUBCASE("empty constraint is identical to unconstrained search") {
    auto a = beam_search(m, kWords, enc, p);
    auto b = constrained_beam_search(m, kWords, enc, make_constraint("", kWords), p);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].token_ids == b[i].token_ids);
      CHECK(a[i].logprob == b[i].logprob);
      CHECK_FALSE(b[i].spliced);
    }
  }
  SUBCASE("a full sentence as prefix is reproduced") {
    auto h = constrained_beam_search(m, kWords, enc, make_constraint("ab a b ab.", kWords), p);
    CHECK(h[0].surface.starts_with("ab a b ab."));
    CHECK_FALSE(h[0].spliced);
  }
  SUBCASE("complete prefix ends exactly there") {
    auto c = make_constraint("ab a b", kWords, /*complete=*/true);
    auto h = constrained_beam_search(m, kWords, enc, c, p);
    CHECK(h[0].surface == "ab a b");
    CHECK(h[0].token_ids.back() == kEosId);
    for (const auto& x : h) CHECK(x.surface == "ab a b");
  }
  SUBCASE("unknown characters take the fallback path") {
    auto h = constrained_beam_search(m, kWords, enc, make_constraint("ab zq", kWords), p);
    REQUIRE(h.size() == 1);
    CHECK(h[0].spliced);
    CHECK(h[0].surface.starts_with("ab zq"));
    CHECK(h[0].token_ids[0] == 6);
    CHECK(h[0].token_ids[1] == kUnkId);
    CHECK(h[0].logprob <= 0.0);
  }
  SUBCASE("prefix longer than max_len falls back") {
    BeamParams short_len = p;
    short_len.max_len = 2;
    auto h = constrained_beam_search(m, kChars, enc, make_constraint("abab", kChars), short_len);
    CHECK(h[0].spliced);
    CHECK(h[0].surface.starts_with("abab"));
  }
  SUBCASE("deterministic") {
    auto a = constrained_beam_search(m, kChars, enc, make_constraint("a b", kChars), p);
    auto b = constrained_beam_search(m, kChars, enc, make_constraint("a b", kChars), p);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].token_ids == b[i].token_ids);
  }
}

TEST_CASE("splice_fallback assembly") {
  const Tokenizer tok(TokenMode::kWord, Vocabulary({"red", "ball", "."}));
  auto c = make_constraint("A zq", tok);
  auto h = splice_fallback(c, tok, {kUnkId, 4, 5, 6, kEosId}, 1, -3.0);
  CHECK(h.surface == "A zq red ball.");
  CHECK(h.spliced);
  auto t = splice_fallback(make_constraint("A zq ", tok), tok, {kUnkId, 4, kEosId}, 1, -1.0);
  CHECK(t.surface == "A zq red");
}

TEST_CASE("length normalization ranks by per-token score") {
  auto m = oracle::random_model(6, 8, 3, 11, 1.5);
  auto enc = m.encode_text(std::vector<TokenId>{4, 5, 4});
  BeamParams p = exhaustive(4);
  p.length_normalization = LengthNormalization::kDivideByLength;
  auto hyp = beam_search(m, kChars, enc, p);
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    CHECK(hyp[i].score == hyp[i].logprob / static_cast<double>(hyp[i].token_ids.size()));
    if (i) CHECK(hyp[i - 1].score >= hyp[i].score);
  }
  CHECK(length_normalization_from_string("divide-by-length") == LengthNormalization::kDivideByLength);
  CHECK_THROWS(length_normalization_from_string("sqrt"));
}

TEST_CASE("prefix postcondition on random models and prefixes") {
  std::mt19937_64 rng(5);
  int failures = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Tokenizer& tok = trial % 2 ? kWords : kChars;
    auto m = oracle::random_model(6, 8, 3, 500 + trial, 1.0);
    auto enc = m.encode_text(oracle::random_source(rng, 6, 5));
    BeamParams p;
    p.beam_width = 1 + trial % 4;
    p.max_len = 4 + trial % 8;
    const auto prefix = random_prefix(rng, "ab .cz", 10);
    for (const auto& h : constrained_beam_search(m, tok, enc, make_constraint(prefix, tok), p)) {
      if (!h.surface.starts_with(prefix)) ++failures;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("beam params validation") {
  BeamParams p;
  p.beam_width = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
