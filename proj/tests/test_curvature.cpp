#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kahlerlab/curvature.hpp"
#include "kahlerlab/error.hpp"
#include "oracles/fd_curvature.hpp"

using namespace kahlerlab;
using cd = std::complex<double>;

namespace {

GridPtr grid() {
  static GridPtr g = RadialGrid::log_uniform(1e-6, 1e6, 2048);
  return g;
}

oracle::MetricFn as_fn(const RadialMetric& m) {
  return [&m](const oracle::Point& z) { return m.matrix_at(z); };
}

oracle::Point off_axis(int n, double r) {
  if (n == 1) return {std::sqrt(r) * cd(0.6, 0.8)};
  return {std::sqrt(r) * cd(0.48, 0.36), std::sqrt(r) * cd(-0.64, 0.48)};
}


}  // namespace

TEST_CASE("flat metric has zero curvature") {
  const auto m = RadialMetric::from_profile(profiles::flat(), 2, grid());
  const auto cp = curvature_ABC(m);
  for (std::size_t i = 0; i < cp.A.size(); ++i) {
    CHECK(cp.A[i] == 0.0);
    CHECK(cp.B[i] == 0.0);
    CHECK(cp.C[i] == 0.0);
    CHECK(cp.R[i] == 0.0);
  }
  const auto bb = bisectional_bounds(m, 1e-3, 1e3, 1, 1000);
  CHECK(bb.kappa == 0.0);
  CHECK(bb.K == 0.0);
}

TEST_CASE("cigar components and origin limits") {
  auto g = grid();
  const auto m = RadialMetric::from_profile(profiles::rational(1.0), 2, g);
  const auto cp = curvature_ABC(m);
  for (std::size_t i = 0; i < g->size(); i += 41)
    CHECK(cp.A[i] == doctest::Approx(1.0 / (1.0 + g->r(i))).epsilon(1e-12));
  CHECK(cp.A[0] == 1.0);
  CHECK(cp.B[0] == 0.5);
  CHECK(cp.C[0] == 1.0);
  CHECK(cp.B[1] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(cp.C[1] == doctest::Approx(1.0).epsilon(1e-5));
  // Quadrature form and integrated-by-parts closed form agree on nodes.
  for (std::size_t i = 1; i < g->size(); i += 29) {
    const auto k = curvature_at(m, g->r(i));
    CHECK(k.B == doctest::Approx(cp.B[i]).epsilon(1e-8));
    CHECK(k.C == doctest::Approx(cp.C[i]).epsilon(1e-8));
  }
}

TEST_CASE("finite-difference oracle: cigar in C^2 at r = 1") {
  const auto m = RadialMetric::from_profile(profiles::rational(1.0), 2, grid());
  const auto fd = oracle::frame_components(as_fn(m), off_axis(2, 1.0));
  const auto k = curvature_at(m, 1.0);
  CHECK(fd.A == doctest::Approx(k.A).epsilon(1e-4));
  CHECK(fd.B == doctest::Approx(k.B).epsilon(1e-4));
  CHECK(fd.C == doctest::Approx(k.C).epsilon(1e-4));
}

TEST_CASE("scalar curvature normalization pinned by the log det oracle") {
  for (int n : {1, 2, 3}) {
    const auto m = RadialMetric::from_profile(profiles::rational(1.0), n, grid());
    for (double r : {0.3, 1.0, 4.0}) {
      oracle::Point z(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = std::sqrt(r / n) * cd(std::cos(i + 0.3), std::sin(i + 0.3));
      const double fd = oracle::scalar_curvature(as_fn(m), z);
      const auto k = curvature_at(m, r);
      INFO("n = " << n << ", r = " << r);
      CHECK(scalar_from_ABC(k.A, k.B, k.C, n) == doctest::Approx(fd).epsilon(1e-4));
      if (n == 1) CHECK(fd == doctest::Approx(1.0 / (1.0 + r)).epsilon(1e-4));
    }
  }
}

TEST_CASE("oracle agreement across profiles and radii") {
  std::vector<ProfilePtr> ps{profiles::rational(1.0), profiles::eventually_constant(0.5, 10.0),
                             profiles::rational(-0.5)};
  for (const auto& p : ps) {
    for (int n : {1, 2}) {
      const auto m = RadialMetric::from_profile(p, n, grid());
      for (double r : {0.05, 2.0, 30.0}) {
        const auto k = curvature_at(m, r);
        const auto fd = oracle::frame_components(as_fn(m), off_axis(n, r));
        INFO(p->name() << " n=" << n << " r=" << r);
        CHECK(std::abs(fd.A - k.A) <= 1e-4 * std::max(std::abs(k.A), 1e-3));
        if (n == 2) {
          CHECK(std::abs(fd.B - k.B) <= 1e-4 * std::max(std::abs(k.B), 1e-3));
          CHECK(std::abs(fd.C - k.C) <= 1e-4 * std::max(std::abs(k.C), 1e-3));
        }
      }
    }
  }
}

TEST_CASE("bisectional quotient matches the oracle tensor") {
  const auto m = RadialMetric::from_profile(profiles::rational(1.0), 2, grid());
  const double r = 0.7;
  const oracle::Point z{std::sqrt(r), 0.0};
  const auto R = oracle::curvature_tensor(as_fn(m), z);
  const auto G = m.matrix_at(z);
  const auto k = curvature_at(m, r);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    oracle::Point X{{N(rng), N(rng)}, {N(rng), N(rng)}}, Y{{N(rng), N(rng)}, {N(rng), N(rng)}};
    // Coordinates in the orthonormal frame e1 = d1/sqrt(h), e2 = d2/sqrt(f).
    oracle::Point Xc{X[0] / std::sqrt(G(0, 0).real()), X[1] / std::sqrt(G(1, 1).real())};
    oracle::Point Yc{Y[0] / std::sqrt(G(0, 0).real()), Y[1] / std::sqrt(G(1, 1).real())};
    const double num = oracle::contract(R, Xc, Yc);
    cd inner = X[0] * std::conj(Y[0]) + X[1] * std::conj(Y[1]);
    const double den = (std::norm(X[0]) + std::norm(X[1])) * (std::norm(Y[0]) + std::norm(Y[1])) +
                       std::norm(inner);
    CHECK(bisectional_quotient(k, 2, X.data(), Y.data()) == doctest::Approx(num / den).epsilon(1e-4));
  }
}

TEST_CASE("bisectional bounds for the cigar against dense random sampling") {
  const auto m = RadialMetric::from_profile(profiles::rational(1.0), 2, grid());
  const auto bb = bisectional_bounds(m, 1e-3, 1e3, 7);
  // Oracle: FD tensor at a ladder of radii, 10^6 random pairs in total.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> N(0.0, 1.0);
  double best = -1e300;
  const int radii = 20;
  for (int j = 0; j < radii; ++j) {
    const double r = std::pow(10.0, -3.0 + 6.0 * j / (radii - 1));
    const oracle::Point z{std::sqrt(r), 0.0};
    const auto R = oracle::curvature_tensor(as_fn(m), z);
    const auto G = m.matrix_at(z);
    const double s0 = std::sqrt(G(0, 0).real()), s1 = std::sqrt(G(1, 1).real());
    for (int t = 0; t < 50000; ++t) {
      oracle::Point X{{N(rng), N(rng)}, {N(rng), N(rng)}}, Y{{N(rng), N(rng)}, {N(rng), N(rng)}};
      oracle::Point Xc{X[0] / s0, X[1] / s1}, Yc{Y[0] / s0, Y[1] / s1};
      const cd inner = X[0] * std::conj(Y[0]) + X[1] * std::conj(Y[1]);
      const double den = (std::norm(X[0]) + std::norm(X[1])) * (std::norm(Y[0]) + std::norm(Y[1])) +
                         std::norm(inner);
      best = std::max(best, oracle::contract(R, Xc, Yc) / den);
    }
  }
  CHECK(std::abs(bb.K - best) <= 0.05 * best);
  CHECK(bb.kappa >= -1e-8);
}

TEST_CASE("sign classes") {
  auto g = grid();
  const auto flat = sign_class(*profiles::flat(), *g);
  CHECK(flat.label == SignClass::NonnegativeBisectional);
  CHECK(flat.nonpositive_conditions);
  CHECK(sign_class(*profiles::rational(1.0), *g).label == SignClass::NonnegativeBisectional);
  const auto neg = sign_class(*profiles::rational(-1.0), *g);
  CHECK(neg.label == SignClass::NonpositiveBisectional);
  CHECK(sign_class(*profiles::oscillator(-1.0), *g).label == SignClass::Mixed);

  const auto m = RadialMetric::from_profile(profiles::rational(-1.0), 2, g);
  const auto bb = bisectional_bounds(m, 1e-4, 1e4, 3, 2000);
  CHECK(bb.K <= 1e-8);
  CHECK(bb.kappa <= 1e-8);
}

TEST_CASE("nonnegative conditions give nonnegative components and lemma bounds") {
  auto g = grid();
  for (const auto& p : {profiles::rational(1.0), profiles::poly_cap(1.0),
                        profiles::eventually_constant(0.7, 5.0)}) {
    const auto m = RadialMetric::from_profile(p, 2, g);
    const auto cp = curvature_ABC(m);
    for (std::size_t i = 0; i < cp.A.size(); ++i) {
      CHECK(std::min({cp.A[i], cp.B[i], cp.C[i]}) >= -1e-8);
    }
    const auto d = decay_and_bound_class(m);
    CHECK(d.B_bound_holds);
    CHECK(d.C_bound_holds);
    const auto bb = bisectional_bounds(m, 1e-6, 1e6, 5, 500);
    CHECK(bb.kappa >= -1e-8);
  }
}

TEST_CASE("completeness") {
  auto g = grid();
  CHECK(completeness_check(RadialMetric::from_profile(profiles::flat(), 2, g)).verdict ==
        Completeness::Complete);
  for (double a : {0.3, 0.5, 1.0}) {
    const auto rep = completeness_check(RadialMetric::from_profile(profiles::eventually_constant(a, 10.0), 2, g));
    CHECK(rep.verdict == Completeness::Complete);
    CHECK(rep.exact_rule);
  }
  CHECK(completeness_check(RadialMetric::from_profile(profiles::eventually_constant(2.0, 1.0), 2, g)).verdict ==
        Completeness::Incomplete);
  // Without a declared support the tail fit decides.
  CHECK(completeness_check(RadialMetric::from_profile(profiles::rational(2.0), 2, g)).verdict ==
        Completeness::Incomplete);
  CHECK(completeness_check(RadialMetric::from_profile(profiles::rational(0.5), 2, g)).verdict ==
        Completeness::Complete);
}

TEST_CASE("decay and boundedness") {
  auto g = grid();
  const auto flat = decay_and_bound_class(RadialMetric::from_profile(profiles::flat(), 2, g));
  CHECK(flat.bounded);
  CHECK(flat.decays);
  for (double a : {0.5, 1.0}) {
    const auto d = decay_and_bound_class(RadialMetric::from_profile(profiles::eventually_constant(a, 10.0), 2, g));
    CHECK(d.bounded);
    CHECK(d.decays);
  }
  const auto cig = decay_and_bound_class(RadialMetric::from_profile(profiles::rational(1.0), 2, g));
  CHECK(cig.bounded);
  const auto wild = decay_and_bound_class(RadialMetric::from_profile(profiles::unbounded_curvature(), 2, g));
  CHECK_FALSE(wild.bounded);
  CHECK(wild.growth_exponent == doctest::Approx(0.4).epsilon(0.25));
}

TEST_CASE("phi formula") {
  CHECK(phi_formula_A(1.0, 0.0, 2) == 4.0);
  const auto m = RadialMetric::from_profile(profiles::rational(1.0), 1, grid());
  for (double r : {0.1, 1.0, 10.0, 500.0}) {
    const auto p = m.at(r);
    const double phi = r * p.f;
    const double phi_prime = r * p.h;  // d(r f)/d log r
    CHECK(phi_formula_A(phi, phi_prime, 1) ==
          doctest::Approx(curvature_at(m, r).A).epsilon(1e-3));
  }
}
