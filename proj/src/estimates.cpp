#include "kahlerlab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kahlerlab/error.hpp"

namespace kahlerlab {

void validate(const ComparisonInputs& inp) {
  require(inp.n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(inp.C >= 1.0, ErrorCode::InvalidArgument, "equivalence constant C must be >= 1");
  require(inp.kappa <= inp.K, ErrorCode::InvalidArgument, "kappa must not exceed K");
}

Comparison comparison_functions(double t, const ComparisonInputs& inp) {
  validate(inp);
  require(t >= 0.0, ErrorCode::OutOfDomain, "t must be >= 0");
  const double n = inp.n;
  const double denom = 1.0 / n - 2.0 * inp.K * t;
  if (inp.K > 0.0 && denom <= 0.0)
    fail(ErrorCode::OutOfDomain, "t reaches 1/(2nK) where v1 blows up");
  Comparison out;
  out.v1 = 1.0 / denom;
  out.v2 = n * inp.C * std::exp(-2.0 * inp.kappa * out.v1 * t);
  const double rad = out.v1 + out.v2 - 2.0 * n;
  if (rad < 0.0) {
    out.negative_radicand = true;
    out.w = 0.0;
  } else {
    out.w = std::sqrt(out.v2 * rad);
  }
  return out;
}

double existence_time(ExistenceVariant variant, const ExistenceParams& p) {
  require(p.n.has_value() && p.K.has_value(), ErrorCode::MissingParam,
          "existence_time needs n and K");
  const double n = *p.n, K = *p.K;
  if (K <= 0.0) return std::numeric_limits<double>::infinity();
  switch (variant) {
    case ExistenceVariant::LowerOnly:
      return 1.0 / (2.0 * n * K);
    case ExistenceVariant::Equivalent:
      require(p.C.has_value(), ErrorCode::MissingParam, "Equivalent variant needs C");
      return 1.0 / (2.0 * *p.C * n * K);
    case ExistenceVariant::BlendPotential:
      require(p.c.has_value(), ErrorCode::MissingParam, "BlendPotential variant needs c");
      return 1.0 / (2.0 * n * K * std::exp(*p.c));
  }
  fail(ErrorCode::InvalidArgument, "unknown existence variant");
}

EigenGap eigen_gap_check(std::span<const double> lambda, double phi, double psi, int n,
                         double tol) {
  require(static_cast<int>(lambda.size()) == n, ErrorCode::DimensionMismatch,
          "eigenvalue count must equal n");
  double phi_c = 0.0, psi_c = 0.0;
  EigenGap out;
  for (double l : lambda) {
    require(l > 0.0, ErrorCode::OutOfDomain, "eigenvalues must be positive");
    phi_c += 1.0 / l;
    psi_c += l;
    out.lhs += (1.0 - l) * (1.0 - l) / l;
    out.max_pinch = std::max(out.max_pinch, std::abs(l - 1.0));
  }
  if (std::abs(phi_c - phi) > tol * std::max(1.0, phi) ||
      std::abs(psi_c - psi) > tol * std::max(1.0, psi))
    fail(ErrorCode::InconsistentTraces, "traces do not match the eigenvalues");
  out.rhs = phi + psi - 2.0 * n;
  out.holds = std::abs(out.lhs - out.rhs) <= 1e-12 * std::max(1.0, std::abs(out.rhs)) * n;
  out.pinch_bound = std::sqrt(std::max(0.0, psi * out.rhs));
  return out;
}

Comparison local_comparison(double t, int n, double C, double C4, double C5) {
  require(n >= 1 && C >= 1.0, ErrorCode::InvalidArgument, "need n >= 1 and C >= 1");
  Comparison out;
  out.v1 = n + C4 * t;
  out.v2 = n * C + C5 * t;
  const double rad = out.v1 + out.v2 - 2.0 * n;
  if (rad < 0.0) {
    out.negative_radicand = true;
  } else {
    out.w = std::sqrt(out.v2 * rad);
  }
  return out;
}

}  // namespace kahlerlab
