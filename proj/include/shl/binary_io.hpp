#pragma once

// Little-endian binary encoding helpers shared by the window cache and the
// model container formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "shl/types.hpp"

namespace shl::bin {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
  requires std::is_arithmetic_v<T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
void put_vector(std::ostream& os, const std::vector<T>& v) {
  put<std::uint64_t>(os, v.size());
  for (const T& x : v) put<T>(os, x);
}

template <typename T>
  requires std::is_arithmetic_v<T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ParseError("unexpected end of binary stream");
  return value;
}

inline std::string get_string(std::istream& is, std::uint32_t max_len = 1u << 24) {
  auto n = get<std::uint32_t>(is);
  if (n > max_len) throw ParseError("string length out of range in binary stream");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw ParseError("unexpected end of binary stream");
  return s;
}

template <typename T>
std::vector<T> get_vector(std::istream& is, std::uint64_t max_len = 1ull << 32) {
  auto n = get<std::uint64_t>(is);
  if (n > max_len) throw ParseError("vector length out of range in binary stream");
  std::vector<T> v(n);
  for (auto& x : v) x = get<T>(is);
  return v;
}

inline void put_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
  char buf[4] = {};
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0) throw ParseError("not a " + what + " file (bad magic)");
}

}  // namespace shl::bin
