#pragma once

#include <cstdint>

namespace toxsim {

// SplitMix64 finalizer used both as the stream step and as a key hash.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent child key from (key, word). Used to split one master
// seed into per-purpose, per-node, per-hop streams so draws are a pure
// function of the identifiers and never of traversal order.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ (word + 0x9E3779B97F4A7C15ULL + (key << 6) + (key >> 2)));
}

template <typename... Rest>
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t word, Rest... rest) noexcept {
  return derive_key(derive_key(key, word), static_cast<std::uint64_t>(rest)...);
}

// Small sequential uniform stream (SplitMix64). Copyable; owned by the caller.
class RngStream {
 public:
  explicit constexpr RngStream(std::uint64_t key) noexcept : state_(key) {}

  constexpr std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi); returns exactly lo when lo == hi.
  double uniform(double lo, double hi) noexcept { return lo + uniform01() * (hi - lo); }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  // Uniform index in [0, n) via 128-bit multiply-shift.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace toxsim
