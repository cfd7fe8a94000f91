#pragma once

#include <optional>
#include <span>

namespace kahlerlab {

struct ComparisonInputs {
  int n = 1;
  double K = 0.0;      // upper bisectional bound of the reference metric
  double kappa = 0.0;  // lower bisectional bound
  double C = 1.0;      // equivalence constant
};

void validate(const ComparisonInputs& inp);

struct Comparison {
  double v1 = 0.0;
  double v2 = 0.0;
  double w = 0.0;
  bool negative_radicand = false;  // w clamped to 0
};

/// v1 = 1/(1/n - 2Kt), v2 = nC exp(-2 kappa v1 t), w = sqrt(v2 (v1 + v2 - 2n)).
Comparison comparison_functions(double t, const ComparisonInputs& inp);

enum class ExistenceVariant { LowerOnly, Equivalent, BlendPotential };

struct ExistenceParams {
  std::optional<int> n;
  std::optional<double> K;
  std::optional<double> C;  // Equivalent
  std::optional<double> c;  // BlendPotential
};

/// Existence time; infinity when K <= 0.
double existence_time(ExistenceVariant variant, const ExistenceParams& params);

struct EigenGap {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double max_pinch = 0.0;    // max_i |lambda_i - 1|
  double pinch_bound = 0.0;  // sqrt(psi * rhs)
};

/// sum (1 - l_i)^2 / l_i against phi + psi - 2n, with phi = sum 1/l_i and
/// psi = sum l_i supplied by the caller and checked for consistency.
EigenGap eigen_gap_check(std::span<const double> lambda, double phi, double psi, int n,
                         double tol = 1e-10);

/// vt1 = n + C4 t, vt2 = nC + C5 t, wt = sqrt(vt2 (vt1 + vt2 - 2n)).
Comparison local_comparison(double t, int n, double C, double C4, double C5);

}  // namespace kahlerlab
