#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace pollinator::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Little-endian encoding regardless of host order.
template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>(bits & 0xFFu);
    if constexpr (sizeof(T) > 1) bits >>= 8;
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
T read_le(std::istream& in) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw FormatError("unexpected end of file");
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) {
    if constexpr (sizeof(T) > 1) bits <<= 8;
    bits |= buf[i];
  }
  return std::bit_cast<T>(bits);
}

inline void write_magic(std::ostream& out, std::string_view magic, std::uint32_t version) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  write_le<std::uint32_t>(out, version);
}

/// Reads and checks the magic tag, returns the stored version.
inline std::uint32_t read_magic(std::istream& in, std::string_view magic) {
  std::array<char, 16> buf{};
  if (magic.size() > buf.size()) throw FormatError("magic too long");
  in.read(buf.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || std::string_view(buf.data(), magic.size()) != magic)
    throw FormatError("bad file magic, expected " + std::string(magic));
  return read_le<std::uint32_t>(in);
}

}  // namespace pollinator::io
