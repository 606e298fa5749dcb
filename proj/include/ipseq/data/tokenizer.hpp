#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipseq/data/vocabulary.hpp"

namespace ipseq {

// Splits normalized text into token surfaces.
//  char: one token per Unicode scalar (spaces included).
//  word: whitespace-separated words; trailing . , ! ? are split off as
//        their own tokens.
std::vector<std::string> split_tokens(std::string_view normalized, TokenMode mode);

bool is_attached_punctuation(std::string_view surface);

class Tokenizer {
 public:
  Tokenizer() = default;
  Tokenizer(TokenMode mode, Vocabulary vocab) : mode_(mode), vocab_(std::move(vocab)) {}

  TokenMode mode() const { return mode_; }
  const Vocabulary& vocab() const { return vocab_; }

  // Normalizes, splits and maps to ids (unknowns -> UNK). Appends EOS.
  std::vector<TokenId> tokenize(std::string_view text) const;

  // Concatenation of continuation() over the ids; stops at the first EOS and
  // skips PAD/BOS.
  std::string detokenize(std::span<const TokenId> ids) const;

  // The exact characters `id` adds to a surface string. In word mode a
  // separating space precedes every token except the first and the attached
  // punctuation tokens.
  std::string continuation(TokenId id, bool first) const;

  // Tokens a search may emit as text: everything but the reserved ids.
  bool is_content(TokenId id) const { return id >= kFirstContentId && id < vocab_.size(); }

 private:
  TokenMode mode_ = TokenMode::kChar;
  Vocabulary vocab_;
};

}  // namespace ipseq
