#include <doctest.h>

#include <stdexcept>
#include <cmath>

#include "repsample/theory.hpp"

using namespace repsample;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("expected unfairness closed form") {
  CHECK(expected_unfairness(1.5, 1.5, 80, 80) == 0.0);
  CHECK(expected_unfairness(2, 1, 100, 100) ==
        doctest::Approx(std::sqrt(2.0 / kPi) * 0.1).epsilon(1e-12));
  // quadrupling both counts halves the value
  const double base = expected_unfairness(2, 1, 100, 100);
  CHECK(expected_unfairness(2, 1, 400, 400) ==
        doctest::Approx(0.5 * base).epsilon(1e-12));
  CHECK_THROWS_AS(expected_unfairness(-1, 1, 10, 10), std::invalid_argument);
  CHECK_THROWS_AS(expected_unfairness(1, 1, 0, 10), std::invalid_argument);
}

TEST_CASE("expected unfairness is antisymmetric under group swap") {
  CHECK(expected_unfairness(2, 1, 50, 200) ==
        doctest::Approx(-expected_unfairness(1, 2, 200, 50)).epsilon(1e-12));
}

TEST_CASE("sample bounds") {
  SUBCASE("delta=0 with equal sigmas forces equal counts") {
    const auto b = sample_bounds(1.0, 1.0, 100, 100, 0.0);
    CHECK(b.min_n0 == doctest::Approx(100.0));
    CHECK(b.min_n1 == doctest::Approx(100.0));
    CHECK(b.feasible);
    CHECK_FALSE(sample_bounds(1.0, 1.0, 99, 100, 0.0).feasible);
  }
  SUBCASE("huge delta is always feasible") {
    const auto b = sample_bounds(2.0, 1.0, 10, 1000, 1e9);
    CHECK(b.feasible);
    CHECK(b.min_n0 < 1.0);
  }
  SUBCASE("worked bound value") {
    // independent arithmetic: sqrt(pi/2*100) = 12.53314, 0.05*that = 0.62666
    const double root = std::sqrt(kPi * 100.0 / 2.0);
    const double expected = 100.0 * std::pow(2.0 / (0.05 * root + 1.0), 2.0);
    CHECK(expected == doctest::Approx(151.17).epsilon(1e-3));
    const auto b = sample_bounds(2.0, 1.0, 200, 100, 0.05);
    CHECK(b.min_n0 == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("feasibility agrees with the closed form on a coarse grid") {
    for (int n0 = 10; n0 <= 400; n0 += 30)
      for (int n1 = 10; n1 <= 400; n1 += 30) {
        const bool via_bounds =
            sample_bounds(2.0, 1.0, n0, n1, 0.05).feasible;
        const bool via_gap =
            std::abs(expected_unfairness(2.0, 1.0, n0, n1)) <= 0.05;
        CHECK(via_bounds == via_gap);
      }
  }
  SUBCASE("raising delta never shrinks the feasible set") {
    for (int n0 = 20; n0 <= 300; n0 += 40)
      for (int n1 = 20; n1 <= 300; n1 += 40) {
        bool prev = sample_bounds(2.0, 1.0, n0, n1, 0.0).feasible;
        for (const double delta : {0.01, 0.05, 0.2, 1.0}) {
          const bool cur = sample_bounds(2.0, 1.0, n0, n1, delta).feasible;
          CHECK((!prev || cur));
          prev = cur;
        }
      }
  }
}

TEST_CASE("zero unfairness ratio") {
  CHECK(zero_unfairness_ratio(1.0, 1.0, 123) == 123.0);
  CHECK(zero_unfairness_ratio(2.0, 1.0, 50) == 200.0);
  const double n0 = zero_unfairness_ratio(1.7, 0.6, 90);
  CHECK(expected_unfairness(1.7, 0.6, n0, 90) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("monte carlo oracle") {
  SUBCASE("symmetric configuration centers on zero") {
    Rng rng(301);
    const auto r = monte_carlo_unfairness(
        UnivariateGroupModel::with_sigmas(1.0, 1.0), 100, 100, 2000, rng);
    CHECK(std::abs(r.mean) <= 3.0 * r.stderr_mean);
  }
  SUBCASE("sigma0=2 sigma1=1 matches the closed form") {
    Rng rng(302);
    const auto r = monte_carlo_unfairness(
        UnivariateGroupModel::with_sigmas(2.0, 1.0), 100, 100, 5000, rng);
    const double closed = expected_unfairness(2.0, 1.0, 100, 100);
    CHECK(r.mean > 0.0);
    CHECK(std::abs(r.mean - closed) <= 3.0 * r.stderr_mean + 1e-3);
  }
  SUBCASE("zero-point sample ratio centers on zero") {
    Rng rng(303);
    const auto r = monte_carlo_unfairness(
        UnivariateGroupModel::with_sigmas(2.0, 1.0), 200, 50, 5000, rng);
    CHECK(std::abs(r.mean) <= 3.0 * r.stderr_mean);
  }
  SUBCASE("standard error scales like one over sqrt(trials)") {
    Rng a(304), b(305);
    const auto small = monte_carlo_unfairness(
        UnivariateGroupModel::with_sigmas(2.0, 1.0), 50, 50, 1000, a);
    const auto large = monte_carlo_unfairness(
        UnivariateGroupModel::with_sigmas(2.0, 1.0), 50, 50, 4000, b);
    CHECK(small.stderr_mean / large.stderr_mean ==
          doctest::Approx(2.0).epsilon(0.25));
  }
  SUBCASE("guards") {
    Rng rng(306);
    CHECK_THROWS_AS(
        monte_carlo_unfairness(UnivariateGroupModel::with_sigmas(1, 1), 10, 10,
                               50, rng),
        std::invalid_argument);
  }
}
