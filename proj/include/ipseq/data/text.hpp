#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ipseq {

// NFC, whitespace runs collapsed to one ASCII space, leading and trailing
// whitespace removed. All text crossing a module boundary is in this form.
std::string normalize(std::string_view text);

// Like normalize() but keeps a single trailing space: in a prefix the trailing
// space is meaningful (it closes the last word).
std::string normalize_prefix(std::string_view text);

// Splits UTF-8 text into one string per Unicode scalar value. Invalid
// sequences become U+FFFD.
std::vector<std::string> split_scalars(std::string_view text);

std::u32string to_scalars(std::string_view text);
std::string from_scalars(std::u32string_view scalars);

std::size_t scalar_count(std::string_view text);

// First `n` scalars of `text` (all of it when n exceeds the length).
std::string scalar_prefix(std::string_view text, std::size_t n);

}  // namespace ipseq
