#pragma once

// Seedable, portable random source. std::mt19937_64 has a fully specified
// output sequence; the draw helpers below avoid std::uniform_*_distribution,
// whose outputs differ between standard library implementations. Substreams
// (per view, per epoch, per pixel, ...) are derived by splitmix64 mixing of
// the base seed with integer labels, so parallel consumers stay reproducible.

#include <cstdint>
#include <random>
#include <vector>

namespace nerfmir {

/// One splitmix64 step.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent substream seed for (seed, a, b, c).
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(seed ^ 0x8f1bbcdcbfa53e0bULL);
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  return mix64(s ^ c);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, n); rejection of the short tail.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
    std::uint64_t x = gen_();
    while (x < threshold) x = gen_();
    return x % n;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

  /// k distinct values from [0, n), in selection order.
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k);

 private:
  std::mt19937_64 gen_;
};

inline std::vector<std::uint32_t> Rng::sample_without_replacement(std::uint32_t n,
                                                                  std::uint32_t k) {
  std::vector<std::uint32_t> pool(n);
  for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
  if (k > n) k = n;
  // Partial Fisher-Yates: fix positions [0, k).
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint64_t j = i + next_below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace nerfmir
