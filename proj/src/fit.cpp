#include "kahlerlab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kahlerlab/error.hpp"

namespace kahlerlab::fit {

LinearFit linear(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::DimensionMismatch, "linear fit: size mismatch");
  require(x.size() >= 2, ErrorCode::WindowEmpty, "linear fit needs two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorCode::WindowEmpty, "linear fit: degenerate abscissae");
  LinearFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - out.intercept - out.slope * x[i];
    ss += e * e;
  }
  out.rms = std::sqrt(ss / n);
  out.points = x.size();
  return out;
}

namespace {

TailFit tail_fit(std::span<const double> r, std::span<const double> y, double decades,
                 double split_tol, bool log_y) {
  require(r.size() == y.size(), ErrorCode::DimensionMismatch, "tail fit: size mismatch");
  double r_hi = 0.0;
  for (double v : r) r_hi = std::max(r_hi, v);
  const double r_lo = r_hi / std::pow(10.0, decades);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] <= 0.0 || r[i] < r_lo) continue;
    if (log_y && y[i] == 0.0) continue;
    xs.push_back(std::log(r[i]));
    ys.push_back(log_y ? std::log(std::abs(y[i])) : y[i]);
  }
  require(xs.size() >= 4, ErrorCode::WindowEmpty, "tail fit: fewer than 4 points in window");
  TailFit out;
  out.points = xs.size();
  out.exponent = linear(xs, ys).slope;
  const std::size_t half = xs.size() / 2;
  out.first_half = linear(std::span(xs).first(half), std::span(ys).first(half)).slope;
  out.second_half = linear(std::span(xs).subspan(half), std::span(ys).subspan(half)).slope;
  out.robust = std::abs(out.first_half - out.second_half) <= split_tol;
  return out;
}

// Residual norm of the linear solve for a fixed exponent.
PowerOffsetFit solve_fixed_p(std::span<const double> x, std::span<const double> y, double p) {
  std::vector<double> basis(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) basis[i] = std::pow(x[i], p);
  PowerOffsetFit out;
  out.p = p;
  const auto lf = linear(basis, y);
  out.c1 = lf.intercept;
  out.c2 = lf.slope;
  out.rms = lf.rms;
  return out;
}

}  // namespace

TailFit loglog_tail(std::span<const double> r, std::span<const double> y, double decades,
                    double split_tol) {
  return tail_fit(r, y, decades, split_tol, true);
}

TailFit semilog_tail(std::span<const double> r, std::span<const double> y, double decades,
                     double split_tol) {
  return tail_fit(r, y, decades, split_tol, false);
}

PowerOffsetFit power_offset(std::span<const double> x, std::span<const double> y,
                            double p_lo, double p_hi) {
  require(p_hi > p_lo, ErrorCode::InvalidArgument, "power_offset: empty exponent range");
  constexpr int kScan = 200;
  double best_p = p_lo;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double p = p_lo + (p_hi - p_lo) * i / kScan;
    if (p == 0.0) continue;
    const double rms = solve_fixed_p(x, y, p).rms;
    if (rms < best) {
      best = rms;
      best_p = p;
    }
  }
  const double step = (p_hi - p_lo) / kScan;
  double a = std::max(p_lo, best_p - step);
  double b = std::min(p_hi, best_p + step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = solve_fixed_p(x, y, c).rms;
  double fd = solve_fixed_p(x, y, d).rms;
  for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = solve_fixed_p(x, y, c).rms;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = solve_fixed_p(x, y, d).rms;
    }
  }
  return solve_fixed_p(x, y, 0.5 * (a + b));
}

}  // namespace kahlerlab::fit
