#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kahlerlab/approximation.hpp"
#include "kahlerlab/error.hpp"
#include "oracles/simpson.hpp"

using namespace kahlerlab;
using namespace kahlerlab::approx;

namespace {

// xi = value on (0, until], NaN beyond; enough for budget integrals away from 0.
class Level final : public XiProfile {
 public:
  Level(double value, double until = INFINITY) : v_(value), until_(until) {}
  double eval(double r) const override {
    if (r <= 0.0) return 0.0;
    return r <= until_ ? v_ : NAN;
  }
  double eval_prime(double) const override { return 0.0; }
  std::string name() const override { return "level"; }

 private:
  double v_, until_;
};

GridPtr default_grid() {
  static GridPtr g = RadialGrid::log_uniform(1e-6, 1e6, 2048);
  return g;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("smooth cutoff shape") {
  for (auto shape : {CutoffShape::Exp, CutoffShape::Quintic}) {
    for (double delta : {0.5, 1.0, 7.0}) {
      const auto eta = smooth_cutoff(3.0, delta, shape);
      CHECK(eta(3.0) == 1.0);
      CHECK(eta(-5.0) == 1.0);
      CHECK(eta(3.0 + delta) == 0.0);
      CHECK(eta(1e9) == 0.0);
      const double mid = eta(3.0 + 0.5 * delta);
      CHECK(mid > 0.0);
      CHECK(mid < 1.0);
      double prev = 1.0;
      for (int i = 1; i < 100; ++i) {
        const double r = 3.0 + delta * i / 100.0;
        const double v = eta(r);
        CHECK(v <= prev);
        CHECK(eta.prime(r) < 0.0);
        prev = v;
      }
      const double total =
          oracle::simpson([&](double r) { return std::abs(eta.prime(r)); }, 3.0, 3.0 + delta);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      for (double x : {0.1, 0.37, 0.5, 0.81}) {
        const double r = 3.0 + x * delta, step = 1e-6 * delta;
        CHECK(eta.prime(r) ==
              doctest::Approx((eta(r + step) - eta(r - step)) / (2 * step)).epsilon(1e-6));
        CHECK(eta.second(r) ==
              doctest::Approx((eta.prime(r + step) - eta.prime(r - step)) / (2 * step))
                  .epsilon(1e-5));
      }
    }
  }
  // |eta'| <= c / delta with c independent of delta.
  double c1 = 0.0, c2 = 0.0;
  const auto a = smooth_cutoff(1.0, 0.1), b = smooth_cutoff(1.0, 10.0);
  for (int i = 0; i <= 1000; ++i) {
    c1 = std::max(c1, 0.1 * std::abs(a.prime(1.0 + 0.1 * i / 1000.0)));
    c2 = std::max(c2, 10.0 * std::abs(b.prime(1.0 + 10.0 * i / 1000.0)));
  }
  CHECK(c1 == doctest::Approx(c2).epsilon(1e-12));
  CHECK_THROWS_AS(smooth_cutoff(1.0, 0.0), Error);
}

TEST_CASE("find_delta_k budgets") {
  auto rat = profiles::rational(1.0);
  CHECK(find_delta_k(*rat, *rat, 3.0).delta == 1.0);
  CHECK(find_delta_k(*rat, *rat, 3.0).capped);

  // xi - xihat = 1, k = 2: log((2 + d)/2) = 1/2 gives d > 1, so the cap wins.
  const auto one = find_delta_k(Level(1.0), *profiles::flat(), 2.0);
  CHECK(one.delta == 1.0);
  CHECK(one.budget_used == doctest::Approx(std::log(1.5)).epsilon(1e-12));

  // xi - xihat = 10, k = 10: 10 log((10 + d)/10) = 0.1.
  const auto ten = find_delta_k(Level(10.0), *profiles::flat(), 10.0);
  CHECK(ten.delta == doctest::Approx(10.0 * std::expm1(0.01)).epsilon(1e-10));
  CHECK_FALSE(ten.capped);
  CHECK(ten.budget_used == doctest::Approx(0.1).epsilon(1e-10));

  // Blow-up past 10.5: the budget is halved.
  const auto blow = find_delta_k(Level(5.0, 10.5), *profiles::flat(), 10.0);
  CHECK(blow.halved);
  CHECK(blow.delta == doctest::Approx(10.0 * std::expm1(0.01)).epsilon(1e-9));

  CHECK(code_of([&] { find_delta_k(*rat, *rat, 5.0, 4.0); }) ==
        ErrorCode::ProfileMismatchDomain);
}

TEST_CASE("blend with identical profiles") {
  auto xi = profiles::rational(1.0);
  const double ks[] = {1.0, 2.0, 4.0};
  const auto rep = blend_sequence(xi, xi, ks, default_grid());
  CHECK(rep.c == 0.0);
  for (const auto& e : rep.entries) {
    CHECK(e.lower == doctest::Approx(std::exp(-1.0 / e.k)).epsilon(1e-15));
    CHECK(e.upper == 1.0);
    CHECK(e.verified);
    for (double r : {0.1, 1.0, 3.0, 10.0, 1e4}) CHECK(e.profile->eval(r) == xi->eval(r));
  }
}

TEST_CASE("blend sandwich under a cap") {
  auto xi = profiles::rational(1.0);
  auto cap = profiles::poly_cap(1.0);
  const double ks[] = {1.0, 2.0, 4.0, 8.0};
  BlendOptions opt;
  opt.n = 2;
  const auto rep = blend_sequence(xi, cap, ks, default_grid(), opt);
  CHECK(rep.c == 0.0);
  CHECK_FALSE(rep.ck_divergent);
  for (const auto& e : rep.entries) {
    INFO("k = " << e.k);
    CHECK(e.verified);
    CHECK(e.measured_min >= e.lower);
    CHECK(e.measured_max <= e.upper);
    const double end = e.k + e.delta.delta;
    for (double r : {0.3 * e.k, 0.99 * e.k, e.k})
      CHECK(e.profile->eval(r) == xi->eval(r));
    for (double r : {end, end * 1.01, 100.0 * end})
      CHECK(e.profile->eval(r) == cap->eval(r));
    // c_k against an independent quadrature of |xi - xihat| / t.
    auto d = [&](double s) {
      const double t = std::exp(s);
      return std::abs(xi->eval(t) - cap->eval(t));
    };
    const double ref = oracle::simpson(d, std::log(1e-12), std::log(end),
                                       std::vector<double>{0.0}, 1e-13);
    CHECK(std::log(e.upper) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("blend metrics converge on compacts") {
  auto xi = profiles::rational(1.0);
  auto cap = profiles::poly_cap(1.0);
  auto g = default_grid();
  const double ks[] = {1.0, 4.0, 16.0, 128.0};
  const auto rep = blend_sequence(xi, cap, ks, g);
  const auto h = build_h_f(xi, g).h;
  for (double R : {1.0, 10.0, 100.0}) {
    double prev = INFINITY;
    for (const auto& e : rep.entries) {
      const auto hk = build_h_f(e.profile, g).h;
      double err = 0.0;
      for (std::size_t i = 0; i < g->size() && g->r(i) <= R; ++i)
        err = std::max(err, std::abs(hk[i] - h[i]));
      INFO("R = " << R << " k = " << e.k);
      CHECK(err <= prev + 1e-13);
      if (e.k >= R) CHECK(err < 1e-12);
      prev = err;
    }
  }
}

TEST_CASE("blend supremum matches quadrature") {
  auto cap = profiles::log_cap();
  auto xi = profiles::combination(cap, 1.0, profiles::bump(5.0, 2.0, 0.5), 1.0);
  const double bump_int = oracle::simpson(
      [](double t) {
        const double x = (t - 5.0) / 2.0;
        return 0.5 * std::exp(1.0 - 1.0 / (1.0 - x * x)) / t;
      },
      3.0 + 1e-12, 7.0 - 1e-12, 1e-14);
  const double ks[] = {2.0, 4.0, 16.0};
  const auto rep = blend_sequence(xi, cap, ks, default_grid());
  CHECK(rep.c == doctest::Approx(bump_int).epsilon(1e-9));
  CHECK(rep.c_at >= 7.0 * (1.0 - 1e-9));
  CHECK(rep.entries.back().upper == doctest::Approx(std::exp(bump_int)).epsilon(1e-8));
  for (const auto& e : rep.entries) CHECK(e.verified);

  BlendOptions strict;
  strict.declared_c = 0.5 * bump_int;
  CHECK(code_of([&] { blend_sequence(xi, cap, ks, default_grid(), strict); }) ==
        ErrorCode::HypothesisFailed);
}

TEST_CASE("unbounded running integral fails the hypothesis") {
  const double ks[] = {1.0};
  CHECK(code_of([&] {
          blend_sequence(profiles::rational(1.0), profiles::flat(), ks, default_grid());
        }) == ErrorCode::HypothesisFailed);
}

TEST_CASE("classify reference cases") {
  auto g = default_grid();
  CHECK(classify_hat_case(*profiles::eventually_constant(1.0, 10.0), -1.0, 0.0, g).tag ==
        HatCase::Case1);
  CHECK(classify_hat_case(*profiles::rational(1.0), -0.5, 0.0, g).tag == HatCase::Case1);
  CHECK(classify_hat_case(*profiles::eventually_constant(-1.0, 10.0), -1.0, 0.0, g).tag ==
        HatCase::Case2);
  const auto osc = classify_hat_case(*profiles::oscillator(-1.0), -1.0, 0.0, g);
  CHECK(osc.tag == HatCase::Case3);
  CHECK(osc.slope_upper < -0.05);
  CHECK(osc.slope_lower < -0.05);
  CHECK(code_of([&] { classify_hat_case(*profiles::log_cap(), -1.0, 1.0, g); }) ==
        ErrorCode::HypothesisFailed);
}

TEST_CASE("reference profiles for cases 1 and 2") {
  auto g = default_grid();
  const auto c2 = construct_hat_xi(profiles::eventually_constant(-1.0, 10.0), HatCase::Case2,
                                   -1.0, 0.0, g);
  CHECK(c2.usable);
  CHECK(c2.range_ok);
  for (double r : {1.0, 2.0, 1e5}) CHECK(c2.profile->eval(r) == -1.0);
  for (double r : {0.1, 0.5, 0.9}) CHECK(c2.profile->eval(r) <= 0.0);
  CHECK(c2.profile->eval(0.0) == 0.0);

  auto xi = profiles::rational(1.0);
  const auto c1 = construct_hat_xi(xi, HatCase::Case1, -1.0, 0.0, g);
  CHECK(c1.usable);
  CHECK(c1.profile->eval(1.0) == 1.0);
  CHECK(std::isfinite(c1.c2));
  const auto J = blend_running_integral(*xi, *c1.profile, g);
  double lo = 0.0, hi = 0.0;
  for (double v : J) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 5.0);  // bounded: both sides of the equivalence hold
}

TEST_CASE("case 3 block recursion") {
  auto g = RadialGrid::log_uniform(1e-6, 1e20, 8192);
  auto xi = profiles::oscillator(-1.0);
  const double alpha = -1.0, beta = 0.0;
  const auto hc = construct_hat_xi(xi, HatCase::Case3, alpha, beta, g);
  CHECK(hc.c3 == doctest::Approx(2.0 * std::log(3.0) + 1.0).epsilon(1e-15));
  REQUIRE(hc.blocks_completed >= 2);
  CHECK(hc.usable);
  CHECK(hc.range_ok);
  CHECK(hc.a.front() == 1.0);
  for (std::size_t i = 1; i < hc.a.size(); ++i) CHECK(hc.a[i] > 3.0 * hc.a[i - 1]);
  CHECK(hc.max_running <= 2.0 * hc.c3 + 1e-8);
  CHECK(std::isfinite(hc.c2));

  // Independent quadrature of (xi - xihat)/t dt = (xi - xihat) ds over each block.
  auto diff = [&](double s) {
    const double t = std::exp(s);
    return xi->eval(t) - hc.profile->eval(t);
  };
  for (int b = 0; b < hc.blocks_completed; ++b) {
    std::vector<double> splits;
    for (int j = 2 * b; j <= 2 * b + 1; ++j)
      for (double m : {1.25, 2.75, 3.0}) splits.push_back(std::log(hc.a[j] * m));
    splits.push_back(std::log(hc.a[2 * b + 1]));
    std::sort(splits.begin(), splits.end());
    const double lo = std::log(hc.a[2 * b]), hi = std::log(hc.a[2 * b + 2]);
    const double block = oracle::simpson(diff, lo, hi, splits, 1e-13);
    INFO("block " << b);
    CHECK(std::abs(block) < 1e-8);
    CHECK(std::abs(hc.block_integrals[b]) < 1e-8);
    // running integral within +-2 c3 on a fine sample of the block
    double run = 0.0, s0 = lo;
    for (int i = 1; i <= 400; ++i) {
      const double s1 = lo + (hi - lo) * i / 400.0;
      run += oracle::simpson(diff, s0, s1, splits, 1e-12);
      s0 = s1;
      CHECK(std::abs(run) <= 2.0 * hc.c3 + 1e-8);
    }
  }
  for (double r : {0.5, 1.0, 2.0, 1e3, 1e10}) {
    const double v = hc.profile->eval(r);
    CHECK(v >= alpha);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("case 3 needs two blocks") {
  auto g = RadialGrid::log_uniform(1e-6, 1e4, 2048);
  auto xi = profiles::oscillator(-1.0);
  CHECK(code_of([&] { construct_hat_xi(xi, HatCase::Case3, -1.0, 0.0, g); }) ==
        ErrorCode::BlocksIncomplete);
  const auto partial = construct_hat_xi(xi, HatCase::Case3, -1.0, 0.0, g, true);
  CHECK_FALSE(partial.usable);
  CHECK(partial.blocks_completed < 2);
}

TEST_CASE("cutoff potentials") {
  auto g = default_grid();
  const auto base = RadialMetric::from_profile(profiles::flat(), 2, g);
  RadialPotential zero{[](double) { return 0.0; }, [](double) { return 0.0; },
                       [](double) { return 0.0; }};
  const auto z = cutoff_potential(base, zero, 10.0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(z.metric.f()[i] == base.f()[i]);
    CHECK(z.metric.h()[i] == base.h()[i]);
  }

  const double eps = 0.1;
  RadialPotential log_u{[=](double r) { return eps * std::log1p(r); },
                        [=](double r) { return eps / (1.0 + r); },
                        [=](double r) { return -eps / ((1.0 + r) * (1.0 + r)); }};
  const auto k100 = cutoff_potential(base, log_u, 100.0);
  CHECK(k100.sandwich_holds);
  CHECK(k100.cross_term < 0.1);
  const auto k1000 = cutoff_potential(base, log_u, 1000.0);
  CHECK(k1000.cross_term < k100.cross_term);
  // Oracle: nodewise eigenvalue ratios straight from the samples.
  double lmin = INFINITY, lmax = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    for (double l : {k100.metric.h()[i] / base.h()[i], k100.metric.f()[i] / base.f()[i]}) {
      lmin = std::min(lmin, l);
      lmax = std::max(lmax, l);
    }
  }
  CHECK(k100.lambda_min == doctest::Approx(lmin).epsilon(1e-14));
  CHECK(k100.lambda_max == doctest::Approx(lmax).epsilon(1e-14));

  RadialPotential linear{[](double r) { return r; }, [](double) { return 1.0; },
                         [](double) { return 0.0; }};
  for (double k : {10.0, 100.0, 1000.0})
    CHECK(code_of([&] { cutoff_potential(base, linear, k); }) == ErrorCode::CrossTermTooLarge);
}

TEST_CASE("c_k growth is reported") {
  auto xi = profiles::eventually_constant(0.2, 2.0);
  auto hat = profiles::eventually_constant(0.5, 2.0);
  const double ks[] = {10.0, 100.0, 1000.0};
  const auto rep = blend_sequence(xi, hat, ks, default_grid());
  CHECK(rep.ck_divergent);
  CHECK(rep.log_ck_slope == doctest::Approx(0.3).epsilon(1e-2));
  for (const auto& e : rep.entries) CHECK(e.verified);
}
