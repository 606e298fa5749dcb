#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ipseq::binary {

// Little-endian fixed-width encoding regardless of host byte order.

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class ReadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ReadError(std::string("truncated input while reading ") + what);
  }
}

inline std::uint32_t get_u32(std::istream& in, const char* what = "u32") {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& in, const char* what = "u64") {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& in, const char* what = "f64") { return std::bit_cast<double>(get_u64(in, what)); }

inline std::string get_string(std::istream& in, const char* what = "string") {
  auto n = get_u32(in, what);
  if (n > (1u << 26)) throw ReadError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  read_exact(in, s.data(), n, what);
  return s;
}

}  // namespace ipseq::binary
