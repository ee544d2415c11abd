#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace ts {

// splitmix64. Cheap, full 64-bit state, good enough for init and shuffling,
// and trivially reproducible across platforms.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53 mantissa bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in [0, bound)
  uint64_t bounded(uint64_t bound) { return bound ? next() % bound : 0; }
};

// Standard Gaussian via Box-Muller over a splitmix stream. Both outputs of a
// pair are consumed, so one stream yields one fixed sequence.
struct GaussianStream {
  SplitMix64 rng;
  double spare = 0.0;
  bool has_spare = false;

  explicit GaussianStream(uint64_t seed) : rng(seed) {}

  double next() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    // u1 in (0, 1] keeps the log argument nonzero
    double u1 = static_cast<double>((rng.next() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = two_pi * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
  }
};

inline uint64_t fnv1a64(const void* bytes, size_t len) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// Derives independent substreams from one user seed, keyed by a parameter
// name or an epoch number.
inline uint64_t hash64(uint64_t seed, std::string_view name) {
  return fnv1a64(name.data(), name.size()) ^ seed;
}

inline uint64_t hash64(uint64_t seed, uint64_t value) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(value >> (8 * i));
  return fnv1a64(b, 8) ^ seed;
}

template <class Vec>
void fisher_yates(Vec& v, SplitMix64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.bounded(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace ts
