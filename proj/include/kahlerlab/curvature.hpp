#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kahlerlab/metric.hpp"

namespace kahlerlab {

/// Orthonormal-frame curvature components on the z_1 axis:
/// A = R(e1,e1,e1,e1), B = R(e1,e1,ei,ei), C = R(ei,ei,ei,ei) = 2 R(ei,ei,ej,ej).
struct CurvatureProfile {
  GridPtr grid;
  int n = 1;
  std::vector<double> A;
  std::vector<double> B;
  std::vector<double> C;
  std::vector<double> R;
  std::vector<double> xi_prime_over_h;
};

/// A = xi'/h, B = F^-2 int_0^r xi' F, C = 2 F^-2 int_0^r h xi with F = r f.
CurvatureProfile curvature_ABC(const RadialMetric& metric);

struct ABC {
  double A;
  double B;
  double C;
};
/// Components at an arbitrary radius from the closed forms
/// C = 2(F - r h)/F^2 and B = xi/F - C/2 (integration by parts of the above).
ABC curvature_at(const RadialMetric& metric, double r);

/// Scalar curvature g^{i jbar} R_{i jbar}.
double scalar_from_ABC(double A, double B, double C, int n);
std::vector<double> scalar_curvature(const CurvatureProfile& cp, int n);

/// Holomorphic bisectional curvature quotient
/// R(X,Xbar,Y,Ybar) / (|X|^2 |Y|^2 + |<X,Y>|^2) in the orthonormal frame at a point
/// whose components are (A, B, C). X and Y hold n complex entries each.
double bisectional_quotient(const ABC& k, int n, const std::complex<double>* X,
                            const std::complex<double>* Y);

struct BisectionalBounds {
  double kappa = 0.0;
  double K = 0.0;
  double frame_min = 0.0;
  double frame_max = 0.0;
  double sampled_min = 0.0;
  double sampled_max = 0.0;
  std::size_t samples = 0;
};

/// Extremes over [r_lo, r_hi] from the frame pairs {A/2, B, C/2} and from
/// random direction pairs (samples_per_decade per decade of r).
BisectionalBounds bisectional_bounds(const RadialMetric& metric, double r_lo, double r_hi,
                                     std::uint64_t seed = 1,
                                     std::size_t samples_per_decade = 10000);

enum class Completeness { Complete, Incomplete, Indeterminate };
std::string to_string(Completeness c);

struct CompletenessReport {
  Completeness verdict = Completeness::Indeterminate;
  double tail_exponent = 0.0;  // a with h ~ r^-a
  bool exact_rule = false;     // decided by the eventually-constant rule
  std::string reason;
};

CompletenessReport completeness_check(const RadialMetric& metric, double fit_margin = 0.05);

struct DecayReport {
  bool bounded = true;
  bool decays = true;
  double sup_xi_prime_over_h = 0.0;
  double growth_exponent = 0.0;  // tail slope of log|xi'/h|
  double rf_exponent = 0.0;      // tail slope of log(r f)
  bool B_bound_holds = true;     // |B| <= sup|xi'/h| nodewise
  bool C_bound_holds = true;     // |C| <= 2 sup|xi'/h| nodewise
};

DecayReport decay_and_bound_class(const RadialMetric& metric);

enum class SignClass { NonnegativeBisectional, NonpositiveBisectional, Mixed };
std::string to_string(SignClass c);

struct SignReport {
  SignClass label = SignClass::Mixed;
  bool nonnegative_conditions = false;  // xi' >= -tol and xi <= 1 + tol
  bool nonpositive_conditions = false;  // xi' <= tol
};

SignReport sign_class(const XiProfile& profile, const RadialGrid& grid, double tol = 1e-12);

/// n(1 + (n-1)/phi) - phi'(1 + 2(n-1)/phi + n(n-1)/phi^2).
double phi_formula_A(double phi, double phi_prime, int n);

}  // namespace kahlerlab
