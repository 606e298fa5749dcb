#include "ipseq/data/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>

#include "ipseq/data/text.hpp"
#include "ipseq/data/tokenizer.hpp"

namespace ipseq {

namespace {
// constexpr so that vocabularies built during static initialization elsewhere see it.
constexpr std::array<std::string_view, 4> kReserved = {"<pad>", "<s>", "</s>", "<unk>"};
}

std::string_view to_string(TokenMode mode) { return mode == TokenMode::kChar ? "char" : "word"; }

TokenMode token_mode_from_string(std::string_view name) {
  if (name == "char") return TokenMode::kChar;
  if (name == "word") return TokenMode::kWord;
  throw std::invalid_argument("unknown tokenization mode: " + std::string(name));
}

bool is_reserved_surface(std::string_view surface) {
  return std::find(kReserved.begin(), kReserved.end(), surface) != kReserved.end();
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& content_tokens) : surfaces_(kReserved.begin(), kReserved.end()) {
  surfaces_.insert(surfaces_.end(), content_tokens.begin(), content_tokens.end());
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    if (surfaces_[i].empty()) throw std::invalid_argument("vocabulary: empty token surface");
    if (i >= kFirstContentId && is_reserved_surface(surfaces_[i])) {
      throw std::invalid_argument("vocabulary: reserved surface used as content token: " + surfaces_[i]);
    }
    if (!ids_.emplace(surfaces_[i], static_cast<TokenId>(i)).second) {
      throw std::invalid_argument("vocabulary: duplicate token " + surfaces_[i]);
    }
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (id >= surfaces_.size()) throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
  return surfaces_[id];
}

std::vector<std::string> Vocabulary::content_tokens() const {
  return {surfaces_.begin() + kFirstContentId, surfaces_.end()};
}

Vocabulary build_vocab(std::span<const std::string> lines, TokenMode mode, std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines) {
    for (auto& tok : split_tokens(normalize(line), mode)) {
      if (!is_reserved_surface(tok)) ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is already lexicographic; a stable sort on frequency
  // keeps that as the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, n] : ranked) tokens.push_back(tok);
  return Vocabulary(tokens);
}

}  // namespace ipseq
