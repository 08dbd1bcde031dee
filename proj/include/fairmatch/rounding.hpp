#ifndef FAIRMATCH_ROUNDING_HPP
#define FAIRMATCH_ROUNDING_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairmatch/rng.hpp"

namespace fairmatch {

// Dependent rounding on a star: turns a fractional vector z in [0,1]^n into
// a random binary vector Z with
//   - exact marginals:          E[Z_f] = z_f
//   - degree preservation:      sum Z in {floor(sum z), ceil(sum z)}
//   - negative correlation:     E[Z_f Z_f'] <= z_f z_f' for f != f'
// Each step pairs the two lowest-indexed fractional entries and shifts mass
// between them until at most one fractional entry is left; the leftover is
// rounded by an independent coin. The fixed pairing order keeps the exact
// outcome distribution reproducible for the enumeration tests.

namespace detail {

constexpr double kSnapTol = 1e-12;

inline void snap(double& z) {
  if (z < kSnapTol) z = 0.0;
  if (z > 1.0 - kSnapTol) z = 1.0;
}

inline bool fractional(double z) { return z > 0.0 && z < 1.0; }

}  // namespace detail

// Rounds in place; entries must be in [0,1] (values within 1e-12 of an
// integer are snapped first).
inline void dependent_round_in_place(std::span<double> z, Rng& rng) {
  for (double& zi : z) {
    if (zi < -detail::kSnapTol || zi > 1.0 + detail::kSnapTol)
      throw std::invalid_argument("dependent_round: value outside [0,1]");
    detail::snap(zi);
  }

  std::size_t i = 0;
  while (true) {
    while (i < z.size() && !detail::fractional(z[i])) ++i;
    std::size_t j = i + 1;
    while (j < z.size() && !detail::fractional(z[j])) ++j;
    if (j >= z.size()) break;

    const double d1 = std::min(1.0 - z[i], z[j]);
    const double d2 = std::min(z[i], 1.0 - z[j]);
    if (rng.next_double() < d2 / (d1 + d2)) {
      z[i] += d1;
      z[j] -= d1;
    } else {
      z[i] -= d2;
      z[j] += d2;
    }
    detail::snap(z[i]);
    detail::snap(z[j]);
  }
  if (i < z.size()) z[i] = rng.bernoulli(z[i]) ? 1.0 : 0.0;
}

struct FractionalVector {
  std::vector<std::string> ids;
  std::vector<double> values;
};

struct BinaryVector {
  std::vector<std::string> ids;
  std::vector<int> values;
};

inline BinaryVector dependent_round(const FractionalVector& z, Rng& rng) {
  if (z.ids.size() != z.values.size())
    throw std::invalid_argument("dependent_round: ids/values size mismatch");
  std::vector<double> work = z.values;
  dependent_round_in_place(work, rng);
  BinaryVector out;
  out.ids = z.ids;
  out.values.reserve(work.size());
  for (double w : work) out.values.push_back(w > 0.5 ? 1 : 0);
  return out;
}

}  // namespace fairmatch

#endif  // FAIRMATCH_ROUNDING_HPP
