#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "dtvr/error.hpp"

namespace dtvr::bin {

template <typename T>
void write(std::ostream& out, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), Errc::CorruptCheckpoint,
          "unexpected end of checkpoint data");
  return value;
}

template <typename T>
void write_vector(std::ostream& out, const std::vector<T>& v) {
  write<std::uint64_t>(out, v.size());
  if (!v.empty()) out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_vector(std::istream& in, std::uint64_t max_len = (1ull << 32)) {
  const auto n = read<std::uint64_t>(in);
  require(n <= max_len, Errc::CorruptCheckpoint, "implausible vector length in checkpoint");
  std::vector<T> v(n);
  if (n) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    require(in.gcount() == static_cast<std::streamsize>(n * sizeof(T)), Errc::CorruptCheckpoint,
            "unexpected end of checkpoint data");
  }
  return v;
}

inline void write_magic(std::ostream& out, const char (&magic)[9], std::uint32_t version) {
  out.write(magic, 8);
  write(out, version);
}

inline std::uint32_t read_magic(std::istream& in, const char (&magic)[9]) {
  char got[8] = {};
  in.read(got, 8);
  require(in.gcount() == 8 && std::string(got, 8) == std::string(magic, 8), Errc::CorruptCheckpoint,
          std::string("bad checkpoint magic, expected ") + magic);
  return read<std::uint32_t>(in);
}

}  // namespace dtvr::bin
