#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nfc {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Seed of the named substream `stream` under the root seed. Distinct names
/// give statistically independent generators; the mapping is fixed forever.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view stream) {
  return detail::splitmix64(detail::splitmix64(root) ^ detail::fnv1a(stream));
}

inline Rng make_rng(std::uint64_t root, std::string_view stream) {
  return Rng(substream_seed(root, stream));
}

// Substream names used by the pipeline.
namespace streams {
inline constexpr std::string_view kSplit = "split";
inline constexpr std::string_view kInit = "init";
inline constexpr std::string_view kShuffle = "shuffle";
inline constexpr std::string_view kDropout = "dropout";
inline constexpr std::string_view kSynthesis = "synthesis";
}  // namespace streams

}  // namespace nfc
