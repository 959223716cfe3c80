#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace pbrl::neural::io {

template <typename T>
void write_raw(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("binary read: unexpected end of stream");
  return value;
}

inline void write_u8(std::ostream& os, std::uint8_t v) { write_raw(os, v); }
inline void write_u32(std::ostream& os, std::uint32_t v) { write_raw(os, v); }
inline void write_i64(std::ostream& os, std::int64_t v) { write_raw(os, v); }
inline void write_f64(std::ostream& os, double v) { write_raw(os, v); }

inline std::uint8_t read_u8(std::istream& is) { return read_raw<std::uint8_t>(is); }
inline std::uint32_t read_u32(std::istream& is) { return read_raw<std::uint32_t>(is); }
inline std::int64_t read_i64(std::istream& is) { return read_raw<std::int64_t>(is); }
inline double read_f64(std::istream& is) { return read_raw<double>(is); }

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, std::uint32_t max_len = 1u << 24) {
  const auto n = read_u32(is);
  if (n > max_len) throw std::runtime_error("binary read: implausible string length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("binary read: unexpected end of stream");
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[8], const char* what) {
  char buf[8];
  is.read(buf, 8);
  if (!is || std::memcmp(buf, magic, 8) != 0) {
    throw std::runtime_error(std::string(what) + " read: bad magic");
  }
}

}  // namespace pbrl::neural::io
