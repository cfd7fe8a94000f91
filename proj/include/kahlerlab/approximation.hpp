#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kahlerlab/metric.hpp"
#include "kahlerlab/profiles.hpp"

namespace kahlerlab::approx {

enum class CutoffShape { Exp, Quintic };

/// eta = 1 on (-inf, k], 0 on [k + delta, inf), strictly decreasing between.
struct Cutoff {
  double k = 1.0;
  double delta = 1.0;
  CutoffShape shape = CutoffShape::Exp;

  double operator()(double r) const;
  double prime(double r) const;
  double second(double r) const;
};

Cutoff smooth_cutoff(double k, double delta, CutoffShape shape = CutoffShape::Exp);

struct DeltaResult {
  double delta = 0.0;
  double budget_used = 0.0;  // int_k^{k+delta} |xi - xihat| / t
  bool capped = false;       // delta hit the cap of 1
  bool halved = false;       // integrand blew up; delta targets half the budget
};

/// Largest delta <= 1 with int_k^{k+delta} |xi - xihat|/t dt <= 1/k
/// (60 bisection steps). Profiles must be valid on [k, r_max].
DeltaResult find_delta_k(const XiProfile& xi, const XiProfile& xihat, double k,
                         double r_max = std::numeric_limits<double>::infinity());

/// xi_k = eta xi + (1 - eta) xihat.
class BlendProfile final : public XiProfile {
 public:
  BlendProfile(ProfilePtr xi, ProfilePtr xihat, Cutoff eta);
  double eval(double r) const override;
  double eval_prime(double r) const override;
  double support_max() const override;
  std::vector<double> breakpoints() const override;
  std::string name() const override;
  const Cutoff& cutoff() const { return eta_; }

 private:
  ProfilePtr xi_, xihat_;
  Cutoff eta_;
};

struct BlendOptions {
  int n = 1;
  std::optional<double> declared_c;  // if set, sup J must not exceed it
  CutoffShape shape = CutoffShape::Exp;
  bool verify = true;  // check the sandwich nodewise
};

struct BlendEntry {
  double k = 0.0;
  DeltaResult delta;
  ProfilePtr profile;
  double lower = 0.0;  // exp(-c - 1/k)
  double upper = 0.0;  // c_k = exp(int_0^{k+delta} |xi - xihat| / t)
  double measured_min = 0.0;
  double measured_max = 0.0;
  bool verified = false;
};

struct BlendReport {
  double c = 0.0;          // sup_r int_0^r (xi - xihat) / t
  double c_at = 0.0;       // where the sup is attained
  double J_tail_slope = 0.0;
  double log_ck_slope = 0.0;  // last local slope of log c_k against log k
  bool ck_divergent = false;
  std::vector<BlendEntry> entries;
};

/// Running integral J(r) = int_0^r (xi - xihat)/t on the grid nodes.
std::vector<double> blend_running_integral(const XiProfile& xi, const XiProfile& xihat,
                                           const GridPtr& grid);

BlendReport blend_sequence(const ProfilePtr& xi, const ProfilePtr& xihat,
                           std::span<const double> k_list, const GridPtr& grid,
                           const BlendOptions& opt = {});

enum class HatCase { Case1, Case2, Case3, Indeterminate };
std::string to_string(HatCase c);

struct HatClassification {
  HatCase tag = HatCase::Indeterminate;
  double slope_upper = 0.0;  // tail slope of int_1^r (xi - 1)/t against log r
  double slope_lower = 0.0;  // tail slope of int_1^r (alpha - xi)/t
  double drawup_upper = 0.0;  // sup_{a<r} int_a^r (xi - 1)/t
  double drawup_lower = 0.0;  // sup_{a<r} int_a^r (alpha - xi)/t
  std::string diagnostics;
};

/// Tail-trend classification over the last two decades of the grid.
/// Throws HypothesisFailed when a drawup exceeds beta.
HatClassification classify_hat_case(const XiProfile& xi, double alpha, double beta,
                                    const GridPtr& grid);

/// Transition profile for Case 3: 1 for t <= 1.25, alpha for t >= 2.75,
/// monotone quintic between.
double hat_rho(double t, double alpha);
double hat_rho_prime(double t, double alpha);

struct HatConstruction {
  HatCase tag = HatCase::Indeterminate;
  ProfilePtr profile;
  std::vector<double> a;  // a_0 < a_1 < ... (Case 3)
  double alpha = 0.0;
  double beta = 0.0;
  double c3 = 0.0;
  int blocks_completed = 0;
  bool usable = false;
  std::vector<double> block_integrals;  // int_{a_2i}^{a_2i+2} (xi - xihat)/t
  double max_running = 0.0;             // max |int_{a_2i}^r (xi - xihat)/t|
  bool range_ok = false;                // alpha <= xihat <= 1 on the grid
  double c2 = 0.0;                      // sup |xihat' / hhat| on the grid
};

/// Reference profile for the given case. Case 3 runs the block recursion up to
/// r_max; with fewer than two completed blocks it throws BlocksIncomplete
/// unless allow_partial is set (the result is then flagged unusable).
HatConstruction construct_hat_xi(const ProfilePtr& xi, HatCase tag, double alpha,
                                 double beta, const GridPtr& grid,
                                 bool allow_partial = false);

struct CutoffPotentialResult {
  RadialMetric metric;
  double cross_term = 0.0;  // max relative size of the eta' and eta'' terms
  double A = 1.0;           // sandwich constant of the untruncated potential
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  bool sandwich_holds = false;  // within [1/(2A), 2A] of the base
};

/// base + i dd-bar (eta_k u) with delta = k. Throws CrossTermTooLarge when the
/// cutoff terms exceed tol relative to the base.
CutoffPotentialResult cutoff_potential(const RadialMetric& base, const RadialPotential& u,
                                       double k, double tol = 0.1,
                                       CutoffShape shape = CutoffShape::Exp);

}  // namespace kahlerlab::approx
