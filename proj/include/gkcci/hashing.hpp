#ifndef GKCCI_HASHING_HPP_
#define GKCCI_HASHING_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace gkcci {

// Stable 64-bit hashes. std::hash is implementation-defined, so anything that
// feeds a reproducible artifact (dataset splits, noise corruption, cache keys)
// goes through these instead.

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Key used for seeded orderings and per-example random decisions.
inline std::uint64_t keyed_hash(std::uint64_t seed, std::string_view s) {
  return splitmix64(fnv1a64(s) ^ splitmix64(seed));
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace gkcci

#endif  // GKCCI_HASHING_HPP_
