#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace amst {

using NodeId = std::uint64_t;

// Edge weights after the uniqueness transform need up to ~8 log n bits.
using Weight = unsigned __int128;

inline constexpr Weight kWeightMax = ~Weight{0} >> 1;

std::string toString(Weight w);

// Parses a non-negative decimal. Throws std::invalid_argument on bad input.
Weight parseWeight(std::string_view text);

inline int bitLength(std::uint64_t v) { return v == 0 ? 0 : 64 - std::countl_zero(v); }

inline int bitLength(Weight v) {
  auto hi = static_cast<std::uint64_t>(v >> 64);
  return hi != 0 ? 64 + bitLength(hi) : bitLength(static_cast<std::uint64_t>(v));
}

// Counter-based mixing used for every shared or per-node random decision.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

template <typename... Rest>
inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix(mix(a, b), static_cast<std::uint64_t>(rest)...);
}

inline std::uint64_t mixWeight(std::uint64_t key, Weight w) {
  return mix(key, static_cast<std::uint64_t>(w >> 64), static_cast<std::uint64_t>(w));
}

// Uniform double in [0, 1) from a hash value.
inline double unitInterval(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace amst
