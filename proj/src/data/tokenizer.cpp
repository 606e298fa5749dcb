#include "ipseq/data/tokenizer.hpp"

#include "ipseq/data/text.hpp"

namespace ipseq {

bool is_attached_punctuation(std::string_view s) { return s == "." || s == "," || s == "!" || s == "?"; }

std::vector<std::string> split_tokens(std::string_view normalized, TokenMode mode) {
  if (mode == TokenMode::kChar) return split_scalars(normalized);

  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < normalized.size()) {
    auto end = normalized.find(' ', start);
    if (end == std::string_view::npos) end = normalized.size();
    std::string_view word = normalized.substr(start, end - start);
    std::vector<std::string> trailing;
    while (!word.empty() && is_attached_punctuation(word.substr(word.size() - 1))) {
      trailing.emplace_back(word.substr(word.size() - 1));
      word.remove_suffix(1);
    }
    if (!word.empty()) out.emplace_back(word);
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
    start = end + 1;
  }
  return out;
}

std::vector<TokenId> Tokenizer::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& tok : split_tokens(normalize(text), mode_)) ids.push_back(vocab_.id(tok));
  ids.push_back(kEosId);
  return ids;
}

std::string Tokenizer::continuation(TokenId id, bool first) const {
  if (id == kEosId || id == kPadId || id == kBosId) return {};
  const auto& s = vocab_.surface(id);
  if (mode_ == TokenMode::kChar || first || is_attached_punctuation(s)) return s;
  return " " + s;
}

std::string Tokenizer::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  bool first = true;
  for (TokenId id : ids) {
    if (id == kEosId) break;
    if (id == kPadId || id == kBosId) continue;
    out += continuation(id, first);
    first = false;
  }
  return out;
}

}  // namespace ipseq
