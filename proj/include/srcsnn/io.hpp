#pragma once

// Byte-level helpers shared by the file formats.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "srcsnn/error.hpp"

namespace srcsnn::io {

template <class T>
  requires std::is_integral_v<T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xffU));
}

template <class T>
  requires std::is_integral_v<T>
void put_be(std::vector<std::uint8_t>& out, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = sizeof(T); i-- > 0;) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xffU));
}

inline void put_f32_le(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, sizeof u);
  put_le(out, u);
}

inline void put_magic(std::vector<std::uint8_t>& out, std::string_view magic) { out.insert(out.end(), magic.begin(), magic.end()); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  std::span<const std::uint8_t> bytes(std::size_t n) {
    if (remaining() < n) throw Error(Errc::truncated);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  template <class T>
  T le() {
    auto b = bytes(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(b[i]) << (8 * i);
    return static_cast<T>(u);
  }

  template <class T>
  T be() {
    auto b = bytes(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u = static_cast<std::make_unsigned_t<T>>((u << 8) | b[i]);
    return static_cast<T>(u);
  }

  float f32_le() {
    const auto u = le<std::uint32_t>();
    float f;
    std::memcpy(&f, &u, sizeof f);
    return f;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary and renames, so readers never see partial files.
inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(Errc::io, "cannot create " + tmp);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error(Errc::io, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot rename " + tmp + ": " + ec.message());
}

inline void write_text(const std::string& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace srcsnn::io
