#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace levy {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Generator for substream `stream` of a 64-bit seed. Distinct (seed, stream)
/// pairs give statistically independent Mersenne Twister states.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  std::array<std::uint32_t, 8> words{};
  std::uint64_t s = splitmix64(seed) ^ splitmix64(stream + 0xD1B54A32D192ED03ULL);
  for (std::size_t i = 0; i < words.size(); i += 2) {
    s = splitmix64(s);
    words[i] = static_cast<std::uint32_t>(s);
    words[i + 1] = static_cast<std::uint32_t>(s >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  // 53 random bits, offset by half a ulp so neither endpoint is reachable.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace levy
