#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>

namespace tsaudit::rng {

// All randomness in the toolkit flows through this generator so that runs
// are reproducible bit-for-bit from a single master seed. Sub-seeds are
// derived with splitmix64 keyed by purpose strings: adding a consumer does
// not perturb the streams of existing ones.

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t splitmix64_step(std::uint64_t& state) {
  state += kGamma;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// derive(parent, purpose) = one splitmix64 step from parent xor fnv1a(purpose).
inline constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                           std::string_view purpose) {
  std::uint64_t state = parent ^ fnv1a64(purpose);
  return splitmix64_step(state);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                           std::string_view purpose,
                                           std::uint64_t index) {
  std::uint64_t state = derive_seed(parent, purpose) ^ (index * kGamma + 1);
  return splitmix64_step(state);
}

// Minimal UniformRandomBitGenerator backed by splitmix64.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() { return splitmix64_step(state_); }

 private:
  std::uint64_t state_;
};

// Uniform double in (0, 1]. 53 significant bits.
inline double uniform01(SplitMix64& g) {
  return (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller (cosine branch, no cached spare). The
// stdlib normal_distribution is implementation-defined, which would break
// the bit-reproducibility contract.
inline double gaussian(SplitMix64& g) {
  const double u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Uniform integer in [0, n) by rejection below the largest multiple of n.
inline std::uint64_t bounded(SplitMix64& g, std::uint64_t n) {
  const std::uint64_t limit = SplitMix64::max() - SplitMix64::max() % n;
  std::uint64_t x = g();
  while (x >= limit) x = g();
  return x % n;
}

// Fisher-Yates; std::shuffle is implementation-defined, this is not.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace tsaudit::rng
