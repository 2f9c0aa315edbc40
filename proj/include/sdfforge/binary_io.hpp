#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "sdfforge/error.hpp"

// Little-endian primitives shared by the binary file formats.
namespace sdfforge::binio {

template <typename U>
void write_uint(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U read_uint(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("unexpected end of file while reading " + std::string(what));
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

inline void write_f32(std::ostream& out, float v) { write_uint<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v)); }
inline float read_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(read_uint<std::uint32_t>(in, what));
}

inline void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), 4); }

inline void expect_magic(std::istream& in, std::string_view magic) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::string_view(buf, 4) != magic) {
    throw DataError("bad magic: expected '" + std::string(magic) + "'");
  }
}

}  // namespace sdfforge::binio
