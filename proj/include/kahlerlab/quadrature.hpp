#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>

namespace kahlerlab::quad {

/// Nodes and weights of the 10-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre10 {
  static const std::array<double, 10>& nodes();
  static const std::array<double, 10>& weights();
};

/// Integrate a smooth function on [a, b] with 10-point Gauss-Legendre.
double gauss_legendre(const std::function<double(double)>& fn, double a, double b);

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
};

/// Adaptive Gauss-Kronrod (G7/K15) with interval bisection. Stops when the
/// summed error estimate falls below max(abs_tol, rel_tol*|I|) or the interval
/// budget is exhausted (converged == false).
AdaptiveResult gauss_kronrod(const std::function<double(double)>& fn, double a,
                             double b, double abs_tol, double rel_tol = 0.0,
                             std::size_t max_intervals = 4000);

/// Same, but splits [a, b] at the interior points in `breaks` first.
AdaptiveResult gauss_kronrod(const std::function<double(double)>& fn, double a,
                             double b, std::span<const double> breaks,
                             double abs_tol, double rel_tol = 0.0,
                             std::size_t max_intervals = 4000);

}  // namespace kahlerlab::quad
