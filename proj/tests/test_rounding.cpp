#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fairmatch/rng.hpp"
#include "fairmatch/rounding.hpp"
#include "oracle_rounding.hpp"

using namespace fairmatch;

namespace {

std::vector<double> marginals_of(const std::map<test::Outcome, double>& dist,
                                 std::size_t n) {
  std::vector<double> m(n, 0.0);
  for (const auto& [out, p] : dist)
    for (std::size_t k = 0; k < n; ++k)
      if (out[k]) m[k] += p;
  return m;
}

}  // namespace

TEST_CASE("integral vectors pass through unchanged") {
  Rng rng(1);
  FractionalVector z{{"a", "b", "c"}, {1.0, 0.0, 1.0}};
  for (int rep = 0; rep < 20; ++rep) {
    const BinaryVector out = dependent_round(z, rng);
    CHECK(out.values == std::vector<int>{1, 0, 1});
  }
}

TEST_CASE("half-half always rounds to exactly one") {
  Rng rng(7);
  FractionalVector z{{"a", "b"}, {0.5, 0.5}};
  int ones_on_a = 0;
  const int n = 200000;
  for (int rep = 0; rep < n; ++rep) {
    const BinaryVector out = dependent_round(z, rng);
    REQUIRE(out.values[0] + out.values[1] == 1);
    ones_on_a += out.values[0];
  }
  const double freq = static_cast<double>(ones_on_a) / n;
  const double se = std::sqrt(0.25 / n);
  CHECK(std::abs(freq - 0.5) <= 4 * se);

  // The single pairing step has exactly two outcomes, each probability 1/2.
  const auto dist = test::exact_rounding_distribution({0.5, 0.5});
  REQUIRE(dist.size() == 2);
  CHECK(dist.at({1, 0}) == Catch::Approx(0.5).margin(1e-12));
  CHECK(dist.at({0, 1}) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("sum below one rounds to at most one entry with exact marginals") {
  const std::vector<double> z = {0.3, 0.4, 0.3};
  const auto dist = test::exact_rounding_distribution(z);
  double total = 0.0;
  for (const auto& [out, p] : dist) {
    int ones = 0;
    for (int b : out) ones += b;
    CHECK(ones == 1);  // sum z = 1 exactly
    total += p;
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-12));
  const auto m = marginals_of(dist, 3);
  CHECK(m[0] == Catch::Approx(0.3).margin(1e-12));
  CHECK(m[1] == Catch::Approx(0.4).margin(1e-12));
  CHECK(m[2] == Catch::Approx(0.3).margin(1e-12));

  Rng rng(3);
  FractionalVector fz{{"a", "b", "c"}, z};
  for (int rep = 0; rep < 10000; ++rep) {
    const BinaryVector out = dependent_round(fz, rng);
    CHECK(out.values[0] + out.values[1] + out.values[2] == 1);
  }
}

TEST_CASE("decision tree certifies marginals and negative correlation") {
  const std::vector<std::vector<double>> corpus = {
      {0.5},
      {0.25, 0.75},
      {0.1, 0.2, 0.7},
      {0.6, 0.6, 0.6},
      {0.9, 0.05, 0.55, 0.5},
      {0.2, 0.2, 0.2, 0.2, 0.2},
      {0.15, 0.35, 0.55, 0.75, 0.95, 0.25},
  };
  for (const auto& z : corpus) {
    const auto dist = test::exact_rounding_distribution(z);
    const std::size_t n = z.size();
    const auto m = marginals_of(dist, n);
    for (std::size_t k = 0; k < n; ++k)
      CHECK(m[k] == Catch::Approx(z[k]).margin(1e-12));

    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        double joint = 0.0;
        for (const auto& [out, p] : dist)
          if (out[a] && out[b]) joint += p;
        CHECK(joint <= z[a] * z[b] + 1e-12);
      }
  }
}

TEST_CASE("sampled draws match the exact marginals") {
  const std::vector<double> z = {0.15, 0.6, 0.45, 0.8};
  Rng rng(11);
  const int n = 100000;
  std::vector<int> counts(z.size(), 0);
  std::vector<double> work(z.size());
  for (int rep = 0; rep < n; ++rep) {
    work = z;
    dependent_round_in_place(work, rng);
    for (std::size_t k = 0; k < z.size(); ++k) counts[k] += work[k] > 0.5;
  }
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double freq = static_cast<double>(counts[k]) / n;
    const double se = std::sqrt(z[k] * (1 - z[k]) / n);
    CHECK(std::abs(freq - z[k]) <= 4 * se);
  }
}

TEST_CASE("degree preservation holds for every draw") {
  Rng z_rng(5);
  Rng rng(6);
  for (int rep = 0; rep < 2000; ++rep) {
    const int n = 1 + static_cast<int>(z_rng.next_below(6));
    std::vector<double> z(n);
    double sum = 0.0;
    for (double& zi : z) {
      zi = z_rng.next_double();
      sum += zi;
    }
    std::vector<double> work = z;
    dependent_round_in_place(work, rng);
    int ones = 0;
    for (double w : work) {
      REQUIRE((w == 0.0 || w == 1.0));
      ones += w > 0.5;
    }
    const double lo = std::floor(sum - 1e-9), hi = std::ceil(sum + 1e-9);
    REQUIRE(ones >= lo);
    REQUIRE(ones <= hi);
  }
}

TEST_CASE("values near the endpoints are snapped before rounding") {
  Rng rng(9);
  std::vector<double> z = {1.0 - 1e-14, 1e-14, 0.5};
  dependent_round_in_place(z, rng);
  CHECK(z[0] == 1.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("out-of-range values are rejected") {
  Rng rng(2);
  std::vector<double> z = {1.2};
  CHECK_THROWS_AS(dependent_round_in_place(z, rng), std::invalid_argument);
  std::vector<double> z2 = {-0.2};
  CHECK_THROWS_AS(dependent_round_in_place(z2, rng), std::invalid_argument);
  FractionalVector fz{{"a"}, {0.5, 0.5}};
  CHECK_THROWS_AS(dependent_round(fz, rng), std::invalid_argument);
}
