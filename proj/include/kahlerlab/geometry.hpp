#pragma once

#include <string>
#include <vector>

#include "kahlerlab/fit.hpp"
#include "kahlerlab/metric.hpp"

namespace kahlerlab::geometry {

/// Distance from the origin to |z|^2 = r: tau = int_0^r sqrt(h)/(2 sqrt t) dt.
/// Computed as int_0^sqrt(r) sqrt(h(s^2)) ds, which has no singular point.
double geodesic_radius(const RadialMetric& metric, double r);
/// tau on every grid node (running integral, t^-1/2 origin model).
std::vector<double> geodesic_radius_nodes(const RadialMetric& metric);

/// pi^n / n!, the Euclidean unit-ball constant.
double vol_const(int n);

struct BallVolume {
  double V = 0.0;             // vol_const(n) (r f)^n
  double identity_lhs = 0.0;  // n int_0^r h f^(n-1) t^(n-1) dt
  double identity_rhs = 0.0;  // (r f)^n
  double identity_rel_err = 0.0;
};
BallVolume ball_volume(const RadialMetric& metric, double r);
std::vector<double> ball_volume_nodes(const RadialMetric& metric);

/// r with geodesic_radius(r) = tau, by bisection on the monotone
/// interpolant of the node table. Throws RangeExceeded outside [0, tau(r_max)].
double radius_of_tau(const RadialMetric& metric, const std::vector<double>& tau_nodes,
                     double tau);

struct AnnulusGrowth {
  std::vector<double> tau;
  std::vector<double> volume;  // V(tau + 1) - V(tau - 1)
  double exponent = 0.0;       // slope of log volume against log tau
  double rms = 0.0;
  bool meets_2n_minus_1 = false;  // exponent >= 2n - 1 - 0.1
};
/// Throws RangeExceeded when tau - 1 < 0 or tau + 1 exceeds the grid.
AnnulusGrowth annulus_growth(const RadialMetric& metric, const std::vector<double>& tau_list);

/// Geometric tau ladder inside the usable range of the grid.
std::vector<double> tau_ladder(const RadialMetric& metric, double tau_lo, std::size_t count);

struct TauTail {
  fit::PowerOffsetFit power;  // tau = c1 + c2 r^p on the tail
  double log_slope = 0.0;     // tau = c + log_slope * log r
  double log_rms = 0.0;
  std::size_t points = 0;
};
/// Fits the tail of tau over nodes with r >= r_lo.
TauTail tau_tail(const RadialMetric& metric, double r_lo);

struct LongtimeReport {
  double a = 0.0;
  bool eventually_constant = false;  // condition (i), exact via support_max
  bool integral_bounded = false;     // |int_1^r (xi - a)/t| <= C on the grid
  double first_violation_r = -1.0;   // first node where the bound fails
  double integral_sup = 0.0;
  bool derivative_decay = false;     // |xi'| r^a -> 0 on the tail
  double derivative_tail_exponent = 0.0;
  bool condition_ii = false;
  bool longtime = false;
  // Hypotheses of the long-time criterion, radial case.
  bool curvature_decays = false;
  bool volume_lower_bound = false;  // a < 1: annulus exponent; a = 1: cigar comparison
  double annulus_exponent = 0.0;
  bool cigar_comparable = false;
  bool plurisubharmonic = true;  // |z|^2 on C^n
  std::vector<std::string> notes;
};
LongtimeReport longtime_conditions(const ProfilePtr& profile, double a, int n = 2,
                                   double C = 5.0);

struct GeometryReport {
  std::vector<double> r;
  std::vector<double> tau;
  std::vector<double> V;
  AnnulusGrowth annulus;
  double max_identity_rel_err = 0.0;
};
/// tau and V on every node, annulus growth over a default ladder, and the
/// volume identity at a decade ladder of radii.
GeometryReport geometry_report(const RadialMetric& metric);

}  // namespace kahlerlab::geometry
