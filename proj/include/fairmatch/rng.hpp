#ifndef FAIRMATCH_RNG_HPP
#define FAIRMATCH_RNG_HPP

#include <cstdint>
#include <cmath>
#include <numbers>
#include <vector>

namespace fairmatch {

// Deterministic 64-bit generator (splitmix64). All randomness in the library
// flows through this so that runs are reproducible across platforms; the
// standard <random> distributions are implementation-defined and would break
// the bit-identical-replay contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform in [0,n) without modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  // Inclusive range.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  double uniform(double a, double b) { return a + next_double() * (b - a); }

  // Box-Muller; consumes two uniforms per call, no cached second value.
  double normal(double mean, double stddev) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double z = std::sqrt(-2.0 * std::log(u1)) *
                     std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Uniform random permutation of {0,..,n-1}.
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

 private:
  std::uint64_t state_;
};

// Hash-combines seed words into a fresh stream seed. Used to derive
// independent streams per (master_seed, trial, purpose) tuple.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0, std::uint64_t d = 0) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(a + 0x9e3779b97f4a7c15ULL);
  h = mix(h ^ (b + 0x9e3779b97f4a7c15ULL));
  h = mix(h ^ (c + 0x9e3779b97f4a7c15ULL));
  h = mix(h ^ (d + 0x9e3779b97f4a7c15ULL));
  return h;
}

}  // namespace fairmatch

#endif  // FAIRMATCH_RNG_HPP
