#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace prefalign {

// splitmix64 finalizer. All seed derivation and random streams in the library
// go through this mixer so results are identical across platforms and
// standard-library implementations.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {
inline std::uint64_t combine(std::uint64_t h, std::uint64_t part) {
  return mix64(h ^ (part + 0x9e3779b97f4a7c15ull));
}
inline std::uint64_t part_value(std::uint64_t v) { return v; }
inline std::uint64_t part_value(std::string_view s) { return fnv1a64(s); }
inline std::uint64_t part_value(const char* s) { return fnv1a64(s); }
}  // namespace detail

/// Derives a child seed from a parent seed and a sequence of parts (integers
/// or strings). Used for per-prompt, per-trial and per-call stream splitting:
/// derive_seed(master, prompt_id), derive_seed(master, "trial", i), ...
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t seed, Parts&&... parts) {
  std::uint64_t h = mix64(seed);
  ((h = detail::combine(h, detail::part_value(parts))), ...);
  return h;
}

/// Minimal deterministic PRNG (splitmix64 sequence). Distribution functions
/// are implemented here rather than via <random> so that streams are
/// bit-reproducible across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    for (;;) {
      std::uint64_t x = next();
      if (x <= limit) return x % n;
    }
  }

  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double gaussian() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace prefalign
