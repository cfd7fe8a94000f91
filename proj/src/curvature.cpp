#include "kahlerlab/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kahlerlab/error.hpp"
#include "kahlerlab/fit.hpp"

namespace kahlerlab {

CurvatureProfile curvature_ABC(const RadialMetric& metric) {
  const auto& grid = metric.grid();
  const std::size_t N = grid->size();
  const auto xi = metric.xi();
  const auto xp = metric.xi_prime();
  const auto& f = metric.f();
  const auto& h = metric.h();

  CurvatureProfile cp;
  cp.grid = grid;
  cp.n = metric.n();
  cp.A.resize(N);
  cp.B.resize(N);
  cp.C.resize(N);
  cp.xi_prime_over_h.resize(N);

  std::vector<double> gB(N), gC(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double r = grid->r(i);
    gB[i] = xp[i] * r * f[i];
    gC[i] = h[i] * xi[i];
  }
  // Both integrands vanish linearly at 0 with slope xi'(0).
  double xp0 = xp[0];
  if (!grid->has_origin()) {
    xp0 = metric.profile() ? metric.profile()->eval_prime(0.0) : xp[0];
  }
  const auto IB = grid->cumulative(gB, 1.0, xp0);
  const auto IC = grid->cumulative(gC, 1.0, xp0);

  for (std::size_t i = 0; i < N; ++i) {
    const double r = grid->r(i);
    cp.A[i] = xp[i] / h[i];
    cp.xi_prime_over_h[i] = cp.A[i];
    if (r == 0.0) {
      cp.B[i] = 0.5 * xp[i];
      cp.C[i] = xp[i];
      continue;
    }
    const double F = r * f[i];
    cp.B[i] = IB[i] / (F * F);
    cp.C[i] = 2.0 * IC[i] / (F * F);
  }
  cp.R = scalar_curvature(cp, metric.n());
  return cp;
}

ABC curvature_at(const RadialMetric& metric, double r) {
  require(static_cast<bool>(metric.profile()), ErrorCode::MissingParam,
          "curvature_at needs a profile-backed metric");
  const auto& xi = *metric.profile();
  const double x1 = xi.eval_prime(0.0);
  if (r == 0.0) return {x1, 0.5 * x1, x1};
  const auto p = metric.at(r);
  const double F = r * p.f;
  const double A = xi.eval_prime(r) / p.h;
  double C;
  if (r < 1e-4) {
    // F - r h = -r^2 f'; avoids the cancellation near the origin.
    C = -2.0 * r * r * p.f_prime / (F * F);
  } else {
    C = 2.0 * (F - r * p.h) / (F * F);
  }
  const double B = xi.eval(r) / F - 0.5 * C;
  return {A, B, C};
}

double scalar_from_ABC(double A, double B, double C, int n) {
  const double m = n - 1;
  return A + 2.0 * m * B + m * C + 0.5 * m * (n - 2) * C;
}

std::vector<double> scalar_curvature(const CurvatureProfile& cp, int n) {
  std::vector<double> out(cp.A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scalar_from_ABC(cp.A[i], cp.B[i], cp.C[i], n);
  return out;
}

double bisectional_quotient(const ABC& k, int n, const std::complex<double>* X,
                            const std::complex<double>* Y) {
  double num = 0.0;
  double nx = 0.0, ny = 0.0;
  std::complex<double> inner = 0.0;
  for (int a = 0; a < n; ++a) {
    const double xa = std::norm(X[a]), ya = std::norm(Y[a]);
    nx += xa;
    ny += ya;
    inner += X[a] * std::conj(Y[a]);
    num += (a == 0 ? k.A : k.C) * xa * ya;
    for (int c = 0; c < n; ++c) {
      if (c == a) continue;
      const double E = (a == 0 || c == 0) ? k.B : 0.5 * k.C;
      num += E * (xa * std::norm(Y[c]) + std::real(X[a] * std::conj(X[c]) * Y[c] * std::conj(Y[a])));
    }
  }
  return num / (nx * ny + std::norm(inner));
}

BisectionalBounds bisectional_bounds(const RadialMetric& metric, double r_lo, double r_hi,
                                     std::uint64_t seed, std::size_t samples_per_decade) {
  const auto& grid = metric.grid();
  const auto cp = curvature_ABC(metric);
  const int n = metric.n();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (grid->r(i) >= r_lo && grid->r(i) <= r_hi) idx.push_back(i);
  require(!idx.empty(), ErrorCode::WindowEmpty, "no grid nodes in the requested window");

  BisectionalBounds out;
  out.frame_min = std::numeric_limits<double>::infinity();
  out.frame_max = -out.frame_min;
  for (std::size_t i : idx) {
    std::vector<double> vals{0.5 * cp.A[i]};
    if (n >= 2) {
      vals.push_back(cp.B[i]);
      vals.push_back(0.5 * cp.C[i]);
    }
    for (double v : vals) {
      out.frame_min = std::min(out.frame_min, v);
      out.frame_max = std::max(out.frame_max, v);
    }
  }

  // Random pass over nodes drawn uniformly from the window.
  const double lo = std::max(r_lo, grid->r_min());
  const double hi = std::min(r_hi, grid->r_max());
  const double decades = hi > lo ? std::max(1.0, std::log10(hi / lo)) : 1.0;
  const auto total = static_cast<std::size_t>(std::ceil(decades)) * samples_per_decade;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
  std::vector<std::complex<double>> X(static_cast<std::size_t>(n)), Y(static_cast<std::size_t>(n));
  out.sampled_min = std::numeric_limits<double>::infinity();
  out.sampled_max = -out.sampled_min;
  for (std::size_t s = 0; s < total; ++s) {
    const std::size_t i = idx[pick(rng)];
    for (int a = 0; a < n; ++a) {
      X[static_cast<std::size_t>(a)] = {gauss(rng), gauss(rng)};
      Y[static_cast<std::size_t>(a)] = {gauss(rng), gauss(rng)};
    }
    const double q = bisectional_quotient({cp.A[i], cp.B[i], cp.C[i]}, n, X.data(), Y.data());
    out.sampled_min = std::min(out.sampled_min, q);
    out.sampled_max = std::max(out.sampled_max, q);
  }
  out.samples = total;
  out.kappa = std::min(out.frame_min, out.sampled_min);
  out.K = std::max(out.frame_max, out.sampled_max);
  return out;
}

std::string to_string(Completeness c) {
  switch (c) {
    case Completeness::Complete: return "Complete";
    case Completeness::Incomplete: return "Incomplete";
    case Completeness::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

CompletenessReport completeness_check(const RadialMetric& metric, double fit_margin) {
  CompletenessReport rep;
  for (std::size_t i = 0; i < metric.grid()->size(); ++i) {
    if (!(metric.f()[i] > 0.0) || !(metric.h()[i] > 0.0)) {
      rep.verdict = Completeness::Incomplete;
      rep.reason = "PositivityLost: f or h <= 0 at r = " + std::to_string(metric.grid()->r(i));
      return rep;
    }
  }
  const auto& prof = metric.profile();
  if (prof && std::isfinite(prof->support_max()) && prof->support_max() < metric.grid()->r_max()) {
    const double a = prof->eval(std::max(prof->support_max(), metric.grid()->r_max()));
    rep.tail_exponent = a;
    rep.exact_rule = true;
    rep.verdict = a <= 1.0 ? Completeness::Complete : Completeness::Incomplete;
    rep.reason = "eventually constant xi = " + std::to_string(a);
    return rep;
  }
  const auto tail = fit::loglog_tail(metric.grid()->radii(), metric.h(), 2.0);
  rep.tail_exponent = -tail.exponent;
  if (!tail.robust) {
    rep.verdict = Completeness::Indeterminate;
    rep.reason = "tail exponent fits disagree across the last two decades";
  } else if (rep.tail_exponent < 1.0 - fit_margin) {
    rep.verdict = Completeness::Complete;
    rep.reason = "h decays slower than 1/r";
  } else if (rep.tail_exponent > 1.0 + fit_margin) {
    rep.verdict = Completeness::Incomplete;
    rep.reason = "h decays faster than 1/r";
  } else {
    rep.verdict = Completeness::Indeterminate;
    rep.reason = "tail exponent within the margin of 1";
  }
  return rep;
}

DecayReport decay_and_bound_class(const RadialMetric& metric) {
  const auto cp = curvature_ABC(metric);
  const auto& grid = metric.grid();
  DecayReport rep;
  for (double v : cp.xi_prime_over_h) rep.sup_xi_prime_over_h = std::max(rep.sup_xi_prime_over_h, std::abs(v));
  const double slack = 1e-9 * std::max(1.0, rep.sup_xi_prime_over_h);
  for (std::size_t i = 0; i < cp.B.size(); ++i) {
    if (std::abs(cp.B[i]) > rep.sup_xi_prime_over_h + slack) rep.B_bound_holds = false;
    if (std::abs(cp.C[i]) > 2.0 * rep.sup_xi_prime_over_h + slack) rep.C_bound_holds = false;
  }

  const double r_lo = grid->r_max() / 100.0;
  std::size_t nonzero = 0;
  double tail_sup = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (grid->r(i) < r_lo) continue;
    const double v = std::abs(cp.xi_prime_over_h[i]);
    tail_sup = std::max(tail_sup, v);
    if (v > 1e-300) ++nonzero;
  }
  bool tail_zero = nonzero < 4 || tail_sup <= 1e-14 * std::max(1.0, rep.sup_xi_prime_over_h);
  if (tail_zero) {
    rep.growth_exponent = -std::numeric_limits<double>::infinity();
  } else {
    // Running maxima from the left (growth) and from the right (decay
    // envelope) remove the zeros of oscillating profiles.
    const std::size_t b = grid->first();
    const std::size_t N = grid->size();
    std::vector<double> fwd(N, 0.0), bwd(N, 0.0);
    double m = 0.0;
    for (std::size_t k = b; k < N; ++k) fwd[k] = m = std::max(m, std::abs(cp.xi_prime_over_h[k]));
    m = 0.0;
    for (std::size_t k = N; k-- > b;) bwd[k] = m = std::max(m, std::abs(cp.xi_prime_over_h[k]));
    std::vector<double> rr, ff, bb;
    for (std::size_t k = b; k < N; ++k) {
      if (fwd[k] > 0.0 && bwd[k] > 0.0) {
        rr.push_back(grid->r(k));
        ff.push_back(fwd[k]);
        bb.push_back(bwd[k]);
      }
    }
    const auto grow = fit::loglog_tail(rr, ff, 2.0);
    const auto decay = fit::loglog_tail(rr, bb, 2.0);
    rep.growth_exponent = grow.exponent > 0.01 ? grow.exponent : decay.exponent;
  }
  rep.bounded = !(rep.growth_exponent > 0.01) && std::isfinite(rep.sup_xi_prime_over_h);

  std::vector<double> F(grid->size());
  for (std::size_t i = 0; i < F.size(); ++i) F[i] = grid->r(i) * metric.f()[i];
  rep.rf_exponent = fit::loglog_tail(grid->radii(), F, 2.0).exponent;
  const bool rf_grows = rep.rf_exponent > 0.01;
  rep.decays = (tail_zero || rep.growth_exponent < -0.01) && rf_grows;
  return rep;
}

std::string to_string(SignClass c) {
  switch (c) {
    case SignClass::NonnegativeBisectional: return "NonnegativeBisectional";
    case SignClass::NonpositiveBisectional: return "NonpositiveBisectional";
    case SignClass::Mixed: return "Mixed";
  }
  return "Mixed";
}

SignReport sign_class(const XiProfile& profile, const RadialGrid& grid, double tol) {
  SignReport rep;
  rep.nonnegative_conditions = true;
  rep.nonpositive_conditions = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    const double xp = profile.eval_prime(r);
    if (xp < -tol || profile.eval(r) > 1.0 + tol) rep.nonnegative_conditions = false;
    if (xp > tol) rep.nonpositive_conditions = false;
  }
  if (rep.nonnegative_conditions) rep.label = SignClass::NonnegativeBisectional;
  else if (rep.nonpositive_conditions) rep.label = SignClass::NonpositiveBisectional;
  else rep.label = SignClass::Mixed;
  return rep;
}

double phi_formula_A(double phi, double phi_prime, int n) {
  const double m = n - 1;
  return n * (1.0 + m / phi) - phi_prime * (1.0 + 2.0 * m / phi + n * m / (phi * phi));
}

}  // namespace kahlerlab
