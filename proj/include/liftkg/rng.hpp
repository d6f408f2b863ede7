#pragma once

#include <cstdint>
#include <random>

namespace liftkg {

/// splitmix64, used to derive independent sub-stream seeds.
inline uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream) {
  return std::mt19937_64(mix_seed(seed ^ mix_seed(stream)));
}

/// Unbiased draw in [0, n); explicit rejection loop so sequences are
/// identical across standard library implementations.
inline uint64_t draw_below(std::mt19937_64& rng, uint64_t n) {
  const uint64_t threshold = (0ULL - n) % n;
  for (;;) {
    const uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

/// Uniform double in [0, 1) with 53-bit resolution.
inline double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * draw_unit(rng);
}

/// In-place Fisher-Yates; implementation-independent unlike std::shuffle.
template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(draw_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace liftkg
