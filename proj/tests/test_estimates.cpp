#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kahlerlab/error.hpp"
#include "kahlerlab/estimates.hpp"

using namespace kahlerlab;

TEST_CASE("comparison functions at t = 0") {
  const auto c = comparison_functions(0.0, {2, 1.0, 0.0, 2.0});
  CHECK(c.v1 == 2.0);
  CHECK(c.v2 == 4.0);
  CHECK(c.w == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(comparison_functions(0.0, {3, 0.5, -1.0, 1.0}).w == 0.0);
  for (int n : {1, 2, 5})
    for (double C : {1.0, 1.5, 4.0})
      CHECK(comparison_functions(0.0, {n, 1.0, 0.0, C}).w ==
            doctest::Approx(n * std::sqrt(C * (C - 1.0))).epsilon(1e-15));
}

TEST_CASE("comparison functions arithmetic") {
  const auto c = comparison_functions(0.1, {2, 1.0, 0.0, 1.0});
  CHECK(std::abs(c.v1 - 10.0 / 3.0) < 1e-12);
  CHECK(std::abs(c.v2 - 2.0) < 1e-12);
  CHECK(std::abs(c.w - std::sqrt(8.0 / 3.0)) < 1e-12);
  CHECK_THROWS_AS(comparison_functions(0.25, {2, 1.0, 0.0, 1.0}), Error);
  CHECK_NOTHROW(comparison_functions(100.0, {2, -1.0, -1.0, 1.0}));
}

TEST_CASE("negative radicand is clamped and flagged") {
  // Unreachable through comparison_functions when kappa <= K and C >= 1, since
  // exp(-y) >= 1 - y keeps v1 + v2 >= 2n; the tightest case is kappa = K, C = 1.
  for (double t : {0.0, 0.01, 0.1, 0.2, 0.24}) {
    const auto c = comparison_functions(t, {2, 1.0, 1.0, 1.0});
    CHECK(c.v1 + c.v2 - 4.0 >= -1e-14);
  }
  const auto c = local_comparison(1.0, 2, 1.0, -3.0, 0.0);
  CHECK(c.negative_radicand);
  CHECK(c.w == 0.0);
}

TEST_CASE("v1 increases and w is continuous at 0") {
  ComparisonInputs inp{3, 0.7, -0.2, 1.3};
  const double T = 1.0 / (2.0 * 3 * 0.7);
  double prev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = T * i / 100.0;
    const double v1 = comparison_functions(t, inp).v1;
    CHECK(v1 > prev);
    prev = v1;
  }
  CHECK(comparison_functions(0.0, inp).v1 == 3.0);
  const double w0 = comparison_functions(0.0, inp).w;
  CHECK(std::abs(comparison_functions(1e-10, inp).w - w0) < 1e-7);
}

TEST_CASE("existence times") {
  CHECK(existence_time(ExistenceVariant::LowerOnly, {2, 1.0, {}, {}}) == 0.25);
  for (auto v : {ExistenceVariant::LowerOnly, ExistenceVariant::Equivalent,
                 ExistenceVariant::BlendPotential})
    CHECK(std::isinf(existence_time(v, {2, -1.0, 2.0, 1.0})));
  CHECK(existence_time(ExistenceVariant::BlendPotential, {2, 1.0, {}, std::log(2.0)}) ==
        doctest::Approx(0.125).epsilon(1e-15));
  CHECK(existence_time(ExistenceVariant::Equivalent, {3, 0.4, 1.0, {}}) ==
        existence_time(ExistenceVariant::LowerOnly, {3, 0.4, {}, {}}));
  CHECK_THROWS_AS(existence_time(ExistenceVariant::Equivalent, {2, 1.0, {}, {}}), Error);
  CHECK_THROWS_AS(existence_time(ExistenceVariant::LowerOnly, {{}, 1.0, {}, {}}), Error);
}

TEST_CASE("eigen gap identity") {
  const double ones[] = {1.0, 1.0, 1.0};
  const auto z = eigen_gap_check(ones, 3.0, 3.0, 3);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  const double two[] = {2.0, 0.5};
  const auto g = eigen_gap_check(two, 2.5, 2.5, 2);
  CHECK(g.lhs == doctest::Approx(1.0));
  CHECK(g.rhs == doctest::Approx(1.0));
  CHECK(g.holds);
  CHECK_THROWS_AS(eigen_gap_check(two, 2.0, 2.5, 2), Error);

  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int trial = 0; trial < 10000; ++trial) {
    double l[3], phi = 0.0, psi = 0.0;
    for (double& x : l) {
      x = std::exp(U(rng));
      phi += 1.0 / x;
      psi += x;
    }
    const auto e = eigen_gap_check(l, phi, psi, 3);
    REQUIRE(std::abs(e.lhs - e.rhs) <= 1e-12 * std::max(1.0, e.rhs));
    for (double x : l) REQUIRE(std::abs(x - 1.0) <= std::sqrt(x * e.rhs) * (1 + 1e-12) + 1e-15);
    REQUIRE(e.max_pinch <= e.pinch_bound * (1 + 1e-12) + 1e-15);
  }
}

TEST_CASE("local comparison") {
  CHECK(local_comparison(0.0, 3, 1.0, 2.0, 2.0).w == 0.0);
  CHECK(local_comparison(0.0, 2, 2.0, 5.0, 5.0).w == doctest::Approx(2.0 * std::sqrt(2.0)));
  const auto c = local_comparison(1.0, 2, 1.0, 1.0, 1.0);
  CHECK(c.v1 == 3.0);
  CHECK(c.v2 == 3.0);
  CHECK(c.w == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));
}
