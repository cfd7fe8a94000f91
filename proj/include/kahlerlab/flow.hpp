#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kahlerlab/approximation.hpp"
#include "kahlerlab/estimates.hpp"
#include "kahlerlab/metric.hpp"

namespace kahlerlab::flow {

/// Q = log(h f^{n-1}) with its first two r-derivatives. Kahler-Ricci flow
/// reduces to d_t f = Q'.
struct RicciRadial {
  std::vector<double> Q;
  std::vector<double> Q_prime;
  std::vector<double> Q_second;
};
RicciRadial ricci_radial(const RadialMetric& metric);
std::vector<double> ricci_rhs(const RadialMetric& metric);

enum class Boundary {
  /// xi at the two outermost nodes is held at its initial value.
  MatchHat,
  /// f is frozen at the two outermost nodes.
  FreezeOuter,
};
std::string to_string(Boundary b);

struct StepControl {
  double tol = 1e-7;  // absolute error on f per step (step doubling)
  double dt_max = 1e-2;
  double dt_min = 1e-14;
  /// Multiplier on the explicit stability limit 0.5 du^2 min(h r_u^2 / r).
  double stability = 1.0;
  bool adaptive = true;
};

struct MonitorSet {
  bool a = true;  // lambda_min >= 1/n - 2Kt
  bool b = true;  // 1 - w <= lambda <= 1 + w
  bool c = true;  // curvature growth exponent >= -1
  bool d = true;  // (d_t - Delta) R >= R^2 / n
  bool e = true;  // log det ratio growth slope (informational)
};

struct FlowConfig {
  GridPtr grid;  // Sinh grid
  double t_end = 0.1;
  double dt0 = 1e-6;
  StepControl control;
  Boundary boundary = Boundary::MatchHat;
  /// Monitor ticks; t_end is always a tick. Empty: uniform every tick_every.
  std::vector<double> ticks;
  double tick_every = 0.01;
  /// Reference metric on the flow grid (monitors a, b, e).
  std::optional<RadialMetric> reference;
  std::optional<ComparisonInputs> bounds;
  MonitorSet monitors;
  double monitor_tol = 1e-6;
  /// Run even when completeness_check does not report Complete.
  bool override_completeness = false;
  bool keep_snapshots = true;
};

struct FlowState {
  double t = 0.0;
  RadialMetric g;
};

/// h from f with the same stencils the flow uses: h = f + r f_u / r_u.
std::vector<double> derive_h(const RadialGrid& grid, const std::vector<double>& f);

/// d_t f on every node of a Sinh grid, with the outer closure of `boundary`.
std::vector<double> flow_rhs(const RadialGrid& grid, const std::vector<double>& f, int n,
                             Boundary boundary, std::span<const double> xi_outer);

/// Flow state from a profile-backed or sampled metric. Profile-backed metrics
/// are re-evaluated exactly on the flow grid; sampled ones are interpolated.
FlowState initial_state(const RadialMetric& initial, const GridPtr& flow_grid);

/// One RK4 step of size dt (no error control).
FlowState rk4_step(const FlowState& s, double dt, Boundary boundary,
                   std::span<const double> xi_outer);

/// Explicit stability limit for the current state.
double stable_dt(const FlowState& s, double stability = 1.0);

/// Scalar curvature R = -Delta Q and the Laplacian of a radial function,
/// Delta u = (r u')'/h + (n-1) u'/f, on the state grid.
std::vector<double> scalar_curvature(const RadialMetric& g);
std::vector<double> radial_laplacian(const RadialMetric& g, const std::vector<double>& u);

struct MonitorResidual {
  char id = 'a';
  double t = 0.0;
  double worst_r = 0.0;
  double residual = 0.0;
  bool violation = false;
  bool informational = false;
};

struct MonitorContext {
  const RadialMetric* reference = nullptr;
  const ComparisonInputs* bounds = nullptr;
  const FlowState* initial = nullptr;   // monitor e
  const FlowState* previous = nullptr;  // monitor d
  MonitorSet set;
  double tol = 1e-6;
  /// Outer nodes excluded from monitors (boundary closure is not the flow).
  std::size_t outer_skip = 3;
};

/// Residuals of monitors a, b, d, e at `state`. Throws MissingHistory when
/// d is requested without a previous state.
std::vector<MonitorResidual> monitor_report(const FlowState& state, const MonitorContext& ctx);

struct Tick {
  double t = 0.0;
  double sup_A = 0.0;
  double sup_B = 0.0;
  double sup_C = 0.0;
  double lambda_min = 1.0;  // relative to the reference, when present
  double lambda_max = 1.0;
  double kahler_residual = 0.0;
};

struct RunReport {
  FlowState final_state;
  std::vector<Tick> ticks;
  std::vector<std::vector<double>> f_snapshots;
  std::vector<std::vector<double>> h_snapshots;
  std::vector<MonitorResidual> ledger;
  int accepted = 0;
  int rejected = 0;
  int violations = 0;
  double existence_time = 0.0;
  double curvature_exponent = 0.0;  // log sup|Rm| against log t over ticks
  double c7_fit = 0.0;              // best linear-in-t bound on the log det ratio
  std::vector<std::string> warnings;
};

/// Advances the initial metric to t_end. Refuses incomplete initial data
/// (completeness_check) unless override_completeness is set.
RunReport run(const FlowConfig& config, const RadialMetric& initial);

struct SequenceRun {
  double k = 0.0;
  RunReport report;
  std::vector<double> deviation;  // sup_{r<=R} |g_k(t) - h_k,0| per tick
  bool deviation_monotone = false;
  double w_fit = 0.0;             // C4 = C5 making wt dominate the deviation
};

struct SequenceReport {
  std::vector<double> tick_times;
  std::vector<SequenceRun> runs;
  std::vector<double> cauchy;  // sup distance between consecutive k on the window
  bool cauchy_decreasing = false;
};

/// Flows from each blend h_k and compares solutions on [0, R] x [t1, t2].
SequenceReport flow_sequence_experiment(const ProfilePtr& xi, const ProfilePtr& xihat,
                                        std::span<const double> k_list,
                                        const FlowConfig& config, int n, double R, double t1,
                                        double t2);

/// Default flow grid: rho0 = 0.5, r_max = 1e4, 400 cells.
GridPtr default_flow_grid(double rho0 = 0.5, double r_max = 1e4, std::size_t nodes = 400);

}  // namespace kahlerlab::flow
