#include "kahlerlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kahlerlab/curvature.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/quadrature.hpp"

namespace kahlerlab::geometry {

namespace {

// Decade split points strictly inside (lo, hi).
std::vector<double> decade_breaks(double lo, double hi) {
  std::vector<double> out;
  for (double p = std::pow(10.0, std::ceil(std::log10(std::max(lo, 1e-300)))); p < hi; p *= 10.0)
    if (p > lo) out.push_back(p);
  return out;
}

void check_range(const RadialMetric& m, double r) {
  require(r >= 0.0 && r <= m.grid()->r_max() * (1.0 + 1e-12), ErrorCode::OutOfDomain,
          "radius outside [0, r_max]");
}

}  // namespace

double vol_const(int n) {
  double c = 1.0;
  for (int k = 1; k <= n; ++k) c *= std::numbers::pi / k;
  return c;
}

double geodesic_radius(const RadialMetric& metric, double r) {
  check_range(metric, r);
  if (r == 0.0) return 0.0;
  const double s_max = std::sqrt(r);
  auto breaks = decade_breaks(metric.grid()->r_min(), r);
  for (double& b : breaks) b = std::sqrt(b);
  const auto res = quad::gauss_kronrod(
      [&](double s) { return std::sqrt(metric.at(std::min(s * s, r)).h); }, 0.0, s_max, breaks,
      1e-14, 1e-12);
  return res.value;
}

std::vector<double> geodesic_radius_nodes(const RadialMetric& metric) {
  const auto& g = *metric.grid();
  std::vector<double> integrand(g.size(), 0.0);
  for (std::size_t i = g.first(); i < g.size(); ++i)
    integrand[i] = std::sqrt(metric.h()[i]) / (2.0 * std::sqrt(g.r(i)));
  // h[0] is h(0) on Log grids and within r_min of it on Sinh grids.
  return g.cumulative(integrand, -0.5, std::sqrt(metric.h()[0]) / 2.0);
}

BallVolume ball_volume(const RadialMetric& metric, double r) {
  check_range(metric, r);
  const int n = metric.n();
  BallVolume out;
  if (r == 0.0) return out;
  const double F = r * metric.at(r).f;
  out.identity_rhs = std::pow(F, n);
  out.V = vol_const(n) * out.identity_rhs;
  const auto res = quad::gauss_kronrod(
      [&](double t) {
        const auto p = metric.at(std::min(t, r));
        return n * p.h * std::pow(p.f * t, n - 1);
      },
      0.0, r, decade_breaks(metric.grid()->r_min(), r), 0.0, 1e-13, 20000);
  out.identity_lhs = res.value;
  out.identity_rel_err = std::abs(out.identity_lhs - out.identity_rhs) / out.identity_rhs;
  return out;
}

std::vector<double> ball_volume_nodes(const RadialMetric& metric) {
  const auto& g = *metric.grid();
  const double c = vol_const(metric.n());
  std::vector<double> V(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) V[i] = c * std::pow(g.r(i) * metric.f()[i], metric.n());
  return V;
}

double radius_of_tau(const RadialMetric& metric, const std::vector<double>& tau_nodes,
                     double tau) {
  const auto& g = *metric.grid();
  require(tau >= 0.0 && tau <= tau_nodes.back(), ErrorCode::RangeExceeded,
          "geodesic radius " + std::to_string(tau) + " is outside the grid range [0, " +
              std::to_string(tau_nodes.back()) + "]");
  if (tau == 0.0) return 0.0;
  const auto it = std::lower_bound(tau_nodes.begin(), tau_nodes.end(), tau);
  const std::size_t j = static_cast<std::size_t>(it - tau_nodes.begin());
  if (j <= g.first()) {
    // first cell: tau ~ sqrt(h0 r)
    const double r1 = g.r(g.first());
    return r1 * (tau / tau_nodes[g.first()]) * (tau / tau_nodes[g.first()]);
  }
  double lo = g.r(j - 1), hi = g.r(j);
  for (int it2 = 0; it2 < 100 && hi - lo > 1e-15 * hi; ++it2) {
    const double mid = 0.5 * (lo + hi);
    (g.interpolate(tau_nodes, mid) < tau ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

AnnulusGrowth annulus_growth(const RadialMetric& metric, const std::vector<double>& tau_list) {
  require(tau_list.size() >= 2, ErrorCode::InvalidArgument, "annulus_growth needs two radii");
  const auto& g = *metric.grid();
  const auto tau_nodes = geodesic_radius_nodes(metric);
  const int n = metric.n();
  auto V_at = [&](double tau) {
    const double r = radius_of_tau(metric, tau_nodes, tau);
    return vol_const(n) * std::pow(r * g.interpolate(metric.f(), r), n);
  };
  AnnulusGrowth out;
  std::vector<double> lt, lv;
  for (double tau : tau_list) {
    require(tau - 1.0 >= 0.0, ErrorCode::RangeExceeded, "annulus needs tau >= 1");
    const double v = V_at(tau + 1.0) - V_at(tau - 1.0);
    out.tau.push_back(tau);
    out.volume.push_back(v);
    lt.push_back(std::log(tau));
    lv.push_back(std::log(v));
  }
  const auto lf = fit::linear(lt, lv);
  out.exponent = lf.slope;
  out.rms = lf.rms;
  out.meets_2n_minus_1 = out.exponent >= 2.0 * n - 1.0 - 0.1;
  return out;
}

std::vector<double> tau_ladder(const RadialMetric& metric, double tau_lo, std::size_t count) {
  const auto tau_nodes = geodesic_radius_nodes(metric);
  const double tau_hi = 0.9 * tau_nodes.back() - 1.0;
  require(tau_hi > tau_lo && count >= 2, ErrorCode::RangeExceeded,
          "tau ladder does not fit inside the grid");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = tau_lo * std::pow(tau_hi / tau_lo, static_cast<double>(k) / (count - 1));
  return out;
}

TauTail tau_tail(const RadialMetric& metric, double r_lo) {
  const auto& g = *metric.grid();
  const auto tau = geodesic_radius_nodes(metric);
  std::vector<double> r, t, lr;
  for (std::size_t i = g.first(); i < g.size(); ++i)
    if (g.r(i) >= r_lo) {
      r.push_back(g.r(i));
      t.push_back(tau[i]);
      lr.push_back(std::log(g.r(i)));
    }
  require(r.size() >= 8, ErrorCode::WindowEmpty, "tau tail window has too few nodes");
  TauTail out;
  out.points = r.size();
  out.power = fit::power_offset(r, t, 1e-3, 1.0);
  const auto lf = fit::linear(lr, t);
  out.log_slope = lf.slope;
  out.log_rms = lf.rms;
  return out;
}

LongtimeReport longtime_conditions(const ProfilePtr& profile, double a, int n, double C) {
  require(a <= 1.0, ErrorCode::InvalidArgument, "longtime_conditions needs a <= 1");
  LongtimeReport out;
  out.a = a;
  const auto grid = RadialGrid::log_uniform(1e-6, 1e6, 2048);
  const auto metric = RadialMetric::from_profile(profile, n, grid);

  const double sm = profile->support_max();
  out.eventually_constant =
      std::isfinite(sm) && std::abs(profile->eval(sm) - a) <= 1e-12 &&
      std::abs(profile->eval(2.0 * sm + 1.0) - a) <= 1e-12;

  // Running int_1^r (xi - a)/t, node to node.
  double J = 0.0;
  out.integral_bounded = true;
  std::size_t i1 = grid->locate(1.0);
  double prev = 1.0;
  std::vector<double> tail_r, tail_d;
  for (std::size_t i = i1 + 1; i < grid->size(); ++i) {
    const double r = grid->r(i);
    J += quad::gauss_kronrod([&](double t) { return (profile->eval(t) - a) / t; }, prev, r,
                             1e-14, 1e-12)
             .value;
    prev = r;
    out.integral_sup = std::max(out.integral_sup, std::abs(J));
    if (out.integral_bounded && std::abs(J) > C) {
      out.integral_bounded = false;
      out.first_violation_r = r;
    }
    if (r >= 10.0) {
      tail_r.push_back(r);
      tail_d.push_back(std::abs(profile->eval_prime(r)) * std::pow(r, a));
    }
  }

  const double dmax = tail_d.empty() ? 0.0 : *std::max_element(tail_d.begin(), tail_d.end());
  if (dmax == 0.0) {
    out.derivative_decay = true;
    out.derivative_tail_exponent = -INFINITY;
  } else {
    // Envelope decay: the running max over the last two decades must fall.
    std::vector<double> env(tail_d.size());
    double m = 0.0;
    for (std::size_t k = tail_d.size(); k-- > 0;) {
      m = std::max(m, tail_d[k]);
      env[k] = m;
    }
    const auto tf = fit::loglog_tail(tail_r, env, 2.0);
    out.derivative_tail_exponent = tf.exponent;
    out.derivative_decay = tf.exponent < -0.01;
  }
  out.condition_ii = out.integral_bounded && out.derivative_decay;
  out.longtime = out.eventually_constant || out.condition_ii;

  out.curvature_decays = decay_and_bound_class(metric).decays;
  if (a < 1.0) {
    // The offsets in tau = c1 + c2 r^((1-a)/2) and in r f bias the fit for
    // decades, so the volume proxy runs on a much longer grid.
    const auto wide = RadialMetric::from_profile(
        profile, n, RadialGrid::log_uniform(1e-6, 1e20, 4096));
    const double tau_max = geodesic_radius_nodes(wide).back();
    const auto ag = annulus_growth(wide, tau_ladder(wide, 0.05 * tau_max, 12));
    out.annulus_exponent = ag.exponent;
    out.volume_lower_bound = ag.meets_2n_minus_1;
  } else {
    // Cigar comparison: int_0^inf |xi - r/(1+r)|/t must stay bounded.
    const auto cigar = profiles::rational(1.0);
    std::vector<double> integrand(grid->size(), 0.0), rr;
    for (std::size_t i = 1; i < grid->size(); ++i) {
      const double r = grid->r(i);
      integrand[i] = std::abs(profile->eval(r) - cigar->eval(r)) / r;
    }
    const auto run = grid->cumulative(integrand, 0.0);
    std::vector<double> tr, tv;
    for (std::size_t i = 1; i < grid->size(); ++i)
      if (grid->r(i) >= 1.0) {
        tr.push_back(grid->r(i));
        tv.push_back(run[i]);
      }
    const auto tf = fit::semilog_tail(tr, tv, 2.0);
    out.cigar_comparable = std::abs(tf.exponent) <= 0.01;
    out.volume_lower_bound = out.cigar_comparable;
    out.notes.push_back("a = 1: volume bound reduced to the cigar comparison flag");
  }
  out.notes.push_back(
      "unit-ball volume bound: only the annulus growth it relies on is verified; the maximal "
      "disjoint family step is not reproduced");
  return out;
}

GeometryReport geometry_report(const RadialMetric& metric) {
  const auto& g = *metric.grid();
  GeometryReport rep;
  rep.r.assign(g.radii().begin(), g.radii().end());
  rep.tau = geodesic_radius_nodes(metric);
  rep.V = ball_volume_nodes(metric);
  if (rep.tau.back() > 25.0) rep.annulus = annulus_growth(metric, tau_ladder(metric, 10.0, 12));
  for (double r = 1e-3; r <= g.r_max(); r *= 10.0)
    rep.max_identity_rel_err = std::max(rep.max_identity_rel_err, ball_volume(metric, r).identity_rel_err);
  return rep;
}

}  // namespace kahlerlab::geometry
