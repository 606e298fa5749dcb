#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ipseq {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kFirstContentId = 4;

enum class TokenMode { kChar, kWord };

std::string_view to_string(TokenMode mode);
TokenMode token_mode_from_string(std::string_view name);

// Bidirectional token <-> id map. Ids 0..3 are PAD, BOS, EOS, UNK; content
// tokens follow in the order given.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& content_tokens);

  std::size_t size() const { return surfaces_.size(); }
  std::size_t content_size() const { return surfaces_.size() - kFirstContentId; }

  std::optional<TokenId> find(std::string_view surface) const;
  TokenId id(std::string_view surface) const { return find(surface).value_or(kUnkId); }
  const std::string& surface(TokenId id) const;
  bool is_reserved(TokenId id) const { return id < kFirstContentId; }

  // Content tokens only, in id order.
  std::vector<std::string> content_tokens() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.surfaces_ == b.surfaces_; }

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;
};

bool is_reserved_surface(std::string_view surface);

// Counts tokens over the lines (each normalized and split per `mode`), orders
// them by descending frequency then byte-wise lexicographic order, and keeps
// the `max_size` most frequent.
Vocabulary build_vocab(std::span<const std::string> lines, TokenMode mode, std::size_t max_size);

}  // namespace ipseq
