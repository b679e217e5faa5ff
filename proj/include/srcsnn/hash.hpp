#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace srcsnn {

// 64-bit FNV-1a. Used for provenance and config fingerprints, not security.
class Fnv1a {
 public:
  Fnv1a& update(std::span<const std::byte> bytes) noexcept {
    for (auto b : bytes) {
      state_ ^= static_cast<std::uint8_t>(b);
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) noexcept { return update(std::as_bytes(std::span(s.data(), s.size()))); }

  template <class T>
  Fnv1a& update_value(const T& v) noexcept {
    return update(std::as_bytes(std::span(&v, 1)));
  }

  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::span<const std::byte> bytes) noexcept { return Fnv1a{}.update(bytes).digest(); }

}  // namespace srcsnn
