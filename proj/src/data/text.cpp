#include "ipseq/data/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace ipseq {

namespace {

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

void append_utf8(std::string& out, char32_t c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
  if (error) {
    out += "\xEF\xBF\xBD";
    return;
  }
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  // Round-trip through scalars first so invalid UTF-8 becomes U+FFFD.
  auto clean = from_scalars(decode(text));
  auto source = icu::UnicodeString::fromUTF8(clean);
  icu::UnicodeString result = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  result.toUTF8String(out);
  return out;
}

std::string collapse(std::string_view text, bool keep_trailing_space) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : decode(nfc(text))) {
    if (u_isUWhiteSpace(static_cast<UChar32>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    append_utf8(out, c);
  }
  if (keep_trailing_space && pending_space && !out.empty()) out.push_back(' ');
  return out;
}

}  // namespace

std::string normalize(std::string_view text) { return collapse(text, false); }

std::string normalize_prefix(std::string_view text) { return collapse(text, true); }

std::vector<std::string> split_scalars(std::string_view text) {
  std::vector<std::string> out;
  for (char32_t c : decode(text)) {
    std::string piece;
    append_utf8(piece, c);
    out.push_back(std::move(piece));
  }
  return out;
}

std::u32string to_scalars(std::string_view text) { return decode(text); }

std::string from_scalars(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size());
  for (char32_t c : scalars) append_utf8(out, c);
  return out;
}

std::size_t scalar_count(std::string_view text) { return decode(text).size(); }

std::string scalar_prefix(std::string_view text, std::size_t n) {
  auto s = decode(text);
  if (n < s.size()) s.resize(n);
  return from_scalars(s);
}

}  // namespace ipseq
