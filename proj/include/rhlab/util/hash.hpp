#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace rhlab {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent stream key from a parent key and a (tag, index) pair.
inline constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t tag, std::uint64_t index = 0) {
  std::uint64_t h = mix64(parent + 0x9E3779B97F4A7C15ull);
  h = mix64(h ^ (tag * 0xD6E8FEB86659FD93ull + 0x632BE59BD9B4E019ull));
  h = mix64(h ^ (index * 0x9E3779B97F4A7C15ull + 0xA0761D6478BD642Full));
  return h;
}

/// Uniform double in [0, 1) from the counter `index` of stream `key`.
inline constexpr double counter_uniform(std::uint64_t key, std::uint64_t index) {
  std::uint64_t z = mix64(key ^ mix64(index + 0x9E3779B97F4A7C15ull));
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace rhlab
