#include "kahlerlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kahlerlab/curvature.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/fit.hpp"

namespace kahlerlab::flow {

namespace {

InnerClosure closure_for(const RadialGrid& g) {
  return g.kind() == GridKind::Sinh ? InnerClosure::Even : InnerClosure::OneSided;
}

// d^2 r / du^2 at node i.
double d2r(const RadialGrid& g, std::size_t i) {
  if (g.kind() == GridKind::Log) return g.r(i);
  const double rho = g.rho0();
  return 2.0 * rho * rho * std::cosh(2.0 * g.u(i));
}

void require_sinh(const RadialGrid& g) {
  require(g.kind() == GridKind::Sinh, ErrorCode::GridMismatch,
          "the flow runs on a sinh (cell-centred) grid");
}

std::vector<double> xi_from_f(const RadialGrid& g, const std::vector<double>& f) {
  const auto cl = closure_for(g);
  const auto fu = g.derivative_u(f, cl);
  const auto fuu = g.second_derivative_u(f, cl);
  std::vector<double> xi(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = g.r(i), ru = g.drdu(i);
    const double h = f[i] + r * fu[i] / ru;
    const double hu = fu[i] * (2.0 - r * d2r(g, i) / (ru * ru)) + r * fuu[i] / ru;
    xi[i] = -r * hu / (ru * h);
  }
  return xi;
}

double sup_abs(std::span<const double> v, std::size_t end) {
  double m = 0.0;
  for (std::size_t i = 0; i < end && i < v.size(); ++i)
    if (std::isfinite(v[i])) m = std::max(m, std::abs(v[i]));
  return m;
}

}  // namespace

std::string to_string(Boundary b) {
  return b == Boundary::MatchHat ? "MatchHat" : "FreezeOuter";
}

RicciRadial ricci_radial(const RadialMetric& metric) {
  const auto& g = *metric.grid();
  const int n = metric.n();
  RicciRadial out;
  out.Q.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double h = metric.h()[i], f = metric.f()[i];
    require(h > 0.0 && f > 0.0, ErrorCode::PositivityLost, "log of a non-positive coefficient");
    out.Q[i] = std::log(h) + (n - 1) * std::log(f);
  }
  out.Q_prime = g.derivative_r(out.Q, closure_for(g));
  out.Q_second = g.derivative_r(out.Q_prime, closure_for(g));
  if (g.has_origin()) {
    out.Q_prime[0] = out.Q_prime[1];
    out.Q_second[0] = out.Q_second[1];
  }
  return out;
}

std::vector<double> ricci_rhs(const RadialMetric& metric) { return ricci_radial(metric).Q_prime; }

std::vector<double> derive_h(const RadialGrid& grid, const std::vector<double>& f) {
  const auto fu = grid.derivative_u(f, closure_for(grid));
  std::vector<double> h(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    h[i] = f[i] + grid.r(i) * fu[i] / grid.drdu(i);
  if (grid.has_origin()) h[0] = f[0];
  return h;
}

std::vector<double> flow_rhs(const RadialGrid& g, const std::vector<double>& f, int n,
                             Boundary boundary, std::span<const double> xi_outer) {
  require_sinh(g);
  const std::size_t N = g.size();
  require(f.size() == N, ErrorCode::GridMismatch, "state size does not match the grid");
  const auto fu = g.derivative_u(f, InnerClosure::Even);
  const auto fuu = g.second_derivative_u(f, InnerClosure::Even);
  std::vector<double> ft(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double r = g.r(i), ru = g.drdu(i);
    const double h = f[i] + r * fu[i] / ru;
    if (!(h > 0.0) || !(f[i] > 0.0)) {
      std::ostringstream os;
      os << "metric lost positivity at r = " << r << " (f = " << f[i] << ", h = " << h << ")";
      fail(ErrorCode::PositivityLost, os.str());
    }
    const double hu = fu[i] * (2.0 - r * d2r(g, i) / (ru * ru)) + r * fuu[i] / ru;
    const double Qu = hu / h + (n - 1) * fu[i] / f[i];
    ft[i] = Qu / ru;
    if (i + 2 >= N) {
      if (boundary == Boundary::FreezeOuter) {
        ft[i] = 0.0;
      } else {
        const double xi_b = xi_outer[i + 2 - N];
        ft[i] = -xi_b / r + (n - 1) * (h - f[i]) / (r * f[i]);
      }
    }
  }
  return ft;
}

FlowState initial_state(const RadialMetric& initial, const GridPtr& flow_grid) {
  require_sinh(*flow_grid);
  std::vector<double> f(flow_grid->size());
  if (initial.profile()) {
    f = build_h_f(initial.profile(), flow_grid).f;
  } else {
    require(flow_grid->r_max() <= initial.grid()->r_max() * (1.0 + 1e-12),
            ErrorCode::OutOfDomain, "flow grid extends beyond the initial metric");
    for (std::size_t i = 0; i < f.size(); ++i)
      f[i] = initial.grid()->interpolate(initial.f(), flow_grid->r(i));
  }
  auto h = derive_h(*flow_grid, f);
  return {0.0, RadialMetric::from_samples(initial.n(), flow_grid, std::move(f), std::move(h))};
}

FlowState rk4_step(const FlowState& s, double dt, Boundary boundary,
                   std::span<const double> xi_outer) {
  const auto& g = *s.g.grid();
  const int n = s.g.n();
  const auto& f0 = s.g.f();
  const std::size_t N = f0.size();
  auto axpy = [&](const std::vector<double>& k, double c) {
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = f0[i] + c * k[i];
    return out;
  };
  const auto k1 = flow_rhs(g, f0, n, boundary, xi_outer);
  const auto k2 = flow_rhs(g, axpy(k1, 0.5 * dt), n, boundary, xi_outer);
  const auto k3 = flow_rhs(g, axpy(k2, 0.5 * dt), n, boundary, xi_outer);
  const auto k4 = flow_rhs(g, axpy(k3, dt), n, boundary, xi_outer);
  std::vector<double> f(N);
  for (std::size_t i = 0; i < N; ++i)
    f[i] = f0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  auto h = derive_h(g, f);
  return {s.t + dt, RadialMetric::from_samples(n, s.g.grid(), std::move(f), std::move(h))};
}

double stable_dt(const FlowState& s, double stability) {
  const auto& g = *s.g.grid();
  double dmax = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ru = g.drdu(i);
    dmax = std::max(dmax, g.r(i) / (s.g.h()[i] * ru * ru));
  }
  return stability * 0.5 * g.du() * g.du() / dmax;
}

std::vector<double> radial_laplacian(const RadialMetric& m, const std::vector<double>& u) {
  const auto& g = *m.grid();
  const auto cl = closure_for(g);
  const auto ur = g.derivative_r(u, cl);
  std::vector<double> P(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) P[i] = g.r(i) * ur[i];
  const auto Pr = g.derivative_r(P, cl);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    out[i] = Pr[i] / m.h()[i] + (m.n() - 1) * ur[i] / m.f()[i];
  return out;
}

std::vector<double> scalar_curvature(const RadialMetric& m) {
  const auto rr = ricci_radial(m);
  auto out = radial_laplacian(m, rr.Q);
  for (double& v : out) v = -v;
  return out;
}

std::vector<MonitorResidual> monitor_report(const FlowState& state, const MonitorContext& ctx) {
  const auto& g = *state.g.grid();
  const int n = state.g.n();
  const double t = state.t;
  const std::size_t end = g.size() > ctx.outer_skip ? g.size() - ctx.outer_skip : g.size();
  std::vector<MonitorResidual> out;
  auto push = [&](char id, double residual, double worst_r, bool informational) {
    MonitorResidual m;
    m.id = id;
    m.t = t;
    m.residual = residual;
    m.worst_r = worst_r;
    m.informational = informational;
    m.violation = !informational && residual < -ctx.tol;
    out.push_back(m);
  };

  const RadialMetric* ref = ctx.reference;
  if (ref) {
    require(ref->grid()->same_as(g) && ref->n() == n, ErrorCode::GridMismatch,
            "reference metric must live on the flow grid");
  }
  auto lambdas = [&](std::size_t i) {
    const double lr = state.g.h()[i] / ref->h()[i];
    const double lt = state.g.f()[i] / ref->f()[i];
    return n > 1 ? std::pair{std::min(lr, lt), std::max(lr, lt)} : std::pair{lr, lr};
  };

  if (ctx.set.a && ref && ctx.bounds) {
    const double thr = 1.0 / n - 2.0 * ctx.bounds->K * t;
    double worst = INFINITY, wr = 0.0;
    for (std::size_t i = 0; i < end; ++i) {
      const double res = lambdas(i).first - thr;
      if (res < worst) {
        worst = res;
        wr = g.r(i);
      }
    }
    push('a', worst, wr, false);
  }

  if (ctx.set.b && ref && ctx.bounds) {
    const auto& B = *ctx.bounds;
    const bool in_domain = B.K <= 0.0 || t < 1.0 / (2.0 * n * B.K);
    if (in_domain) {
      const double w = comparison_functions(t, B).w;
      double worst = INFINITY, wr = 0.0;
      for (std::size_t i = 0; i < end; ++i) {
        const auto [lo, hi] = lambdas(i);
        const double res = std::min(lo - (1.0 - w), (1.0 + w) - hi);
        if (res < worst) {
          worst = res;
          wr = g.r(i);
        }
      }
      push('b', worst, wr, false);
    }
  }

  if (ctx.set.d) {
    require(ctx.previous != nullptr, ErrorCode::MissingHistory,
            "monitor d needs the previous accepted state");
    const auto& prev = *ctx.previous;
    const double dt = t - prev.t;
    require(dt > 0.0, ErrorCode::MissingHistory, "previous state is not earlier in time");
    const auto R1 = scalar_curvature(state.g);
    const auto R0 = scalar_curvature(prev.g);
    const auto L1 = radial_laplacian(state.g, R1);
    const auto L0 = radial_laplacian(prev.g, R0);
    // R and its Laplacian reach 10 nodes; keep the closure nodes out of the stencil.
    const std::size_t end_d = end > 10 ? end - 10 : 0;
    double worst = INFINITY, wr = 0.0;
    for (std::size_t i = 0; i < end_d; ++i) {
      const double Rm = 0.5 * (R0[i] + R1[i]);
      const double Rt = (R1[i] - R0[i]) / dt;
      const double val = Rt - 0.5 * (L0[i] + L1[i]) - Rm * Rm / n;
      const double scale = std::max({1.0, Rm * Rm, std::abs(Rt)});
      if (val / scale < worst) {
        worst = val / scale;
        wr = g.r(i);
      }
    }
    push('d', worst, wr, false);
  }

  if (ctx.set.e && ref && ctx.initial && t > 0.0) {
    const auto& s0 = ctx.initial->g;
    double worst = -INFINITY, wr = 0.0;
    for (std::size_t i = 0; i < end; ++i) {
      auto ld = [&](const RadialMetric& m) {
        return std::log(m.h()[i] / ref->h()[i]) + (n - 1) * std::log(m.f()[i] / ref->f()[i]);
      };
      const double slope = (ld(state.g) - ld(s0)) / t;
      if (slope > worst) {
        worst = slope;
        wr = g.r(i);
      }
    }
    push('e', worst, wr, true);
  }
  return out;
}

namespace {

Tick make_tick(const FlowState& s, const RadialMetric* ref, std::size_t skip) {
  Tick tk;
  tk.t = s.t;
  const auto& g = *s.g.grid();
  const std::size_t end = g.size() > skip ? g.size() - skip : g.size();
  const auto cp = curvature_ABC(s.g);
  tk.sup_A = sup_abs(cp.A, end);
  tk.sup_B = sup_abs(cp.B, end);
  tk.sup_C = sup_abs(cp.C, end);
  tk.kahler_residual = s.g.kahler_residual();
  if (ref) {
    const auto rel = relative_nodes(s.g, *ref);
    tk.lambda_min = rel.min_lambda;
    tk.lambda_max = rel.max_lambda;
  }
  return tk;
}

}  // namespace

RunReport run(const FlowConfig& config, const RadialMetric& initial) {
  require(static_cast<bool>(config.grid), ErrorCode::MissingParam, "flow grid not set");
  require_sinh(*config.grid);
  require(config.t_end > 0.0 && config.dt0 > 0.0, ErrorCode::InvalidArgument,
          "t_end and dt0 must be positive");

  std::string indeterminate;
  if (!config.override_completeness) {
    const auto cr = completeness_check(initial);
    if (cr.verdict == Completeness::Incomplete)
      fail(ErrorCode::HypothesisFailed,
           "completeness_check reports Incomplete for the initial metric (" + cr.reason +
               "); pass the override to run anyway");
    if (cr.verdict == Completeness::Indeterminate) indeterminate = cr.reason;
  }

  RunReport rep;
  if (!indeterminate.empty())
    rep.warnings.push_back("completeness_check is indeterminate: " + indeterminate);
  const RadialMetric* ref = config.reference ? &*config.reference : nullptr;
  const ComparisonInputs* bounds = config.bounds ? &*config.bounds : nullptr;
  if (bounds) {
    rep.existence_time =
        existence_time(ExistenceVariant::LowerOnly, {bounds->n, bounds->K, {}, {}});
    if (config.t_end >= rep.existence_time)
      rep.warnings.push_back("t_end is not below the existence time 1/(2nK)");
  } else {
    rep.existence_time = INFINITY;
  }

  FlowState state = initial_state(initial, config.grid);
  const FlowState s0 = state;
  const auto xi0 = xi_from_f(*config.grid, state.g.f());
  const std::vector<double> xi_outer(xi0.end() - 2, xi0.end());

  std::vector<double> ticks = config.ticks;
  if (ticks.empty())
    for (double t = config.tick_every; t < config.t_end * (1.0 - 1e-12); t += config.tick_every)
      ticks.push_back(t);
  ticks.push_back(config.t_end);
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::remove_if(ticks.begin(), ticks.end(),
                             [&](double t) { return t <= 0.0 || t > config.t_end; }),
              ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());

  MonitorContext ctx;
  ctx.reference = ref;
  ctx.bounds = bounds;
  ctx.initial = &s0;
  ctx.set = config.monitors;
  ctx.tol = config.monitor_tol;
  constexpr std::size_t kSkip = 3;
  ctx.outer_skip = kSkip;

  auto record = [&](const FlowState& s, const FlowState* prev) {
    rep.ticks.push_back(make_tick(s, ref, kSkip));
    if (config.keep_snapshots) {
      rep.f_snapshots.push_back(s.g.f());
      rep.h_snapshots.push_back(s.g.h());
    }
    MonitorContext c = ctx;
    c.previous = prev;
    if (!prev) c.set.d = false;
    for (const auto& m : monitor_report(s, c)) {
      rep.ledger.push_back(m);
      if (m.violation) ++rep.violations;
    }
  };
  record(state, nullptr);

  const auto& ctl = config.control;
  double dt_ctrl = config.dt0;
  FlowState prev = state;
  for (double target : ticks) {
    while (state.t < target * (1.0 - 1e-14)) {
      const double cap = std::min(ctl.dt_max, stable_dt(state, ctl.stability));
      double dt = ctl.adaptive ? std::min(dt_ctrl, cap) : std::min(config.dt0, target - state.t);
      bool clipped = false;
      if (state.t + dt >= target * (1.0 - 1e-14) || state.t + dt > target) {
        dt = target - state.t;
        clipped = true;
      }
      if (!ctl.adaptive) {
        prev = state;
        state = rk4_step(state, dt, config.boundary, xi_outer);
        if (clipped) state.t = target;
        ++rep.accepted;
        continue;
      }
      const auto big = rk4_step(state, dt, config.boundary, xi_outer);
      const auto half = rk4_step(state, 0.5 * dt, config.boundary, xi_outer);
      auto small = rk4_step(half, 0.5 * dt, config.boundary, xi_outer);
      double err = 0.0;
      for (std::size_t i = 0; i < small.g.f().size(); ++i)
        err = std::max(err, std::abs(small.g.f()[i] - big.g.f()[i]) / 15.0);
      const double grow = err > 0.0 ? 0.9 * std::pow(ctl.tol / err, 0.2) : 2.0;
      if (err <= ctl.tol) {
        prev = state;
        state = std::move(small);
        if (clipped) state.t = target;
        ++rep.accepted;
        if (!clipped || grow < 1.0) dt_ctrl = std::min(cap, dt * std::min(2.0, grow));
      } else {
        ++rep.rejected;
        dt_ctrl = dt * std::max(0.2, grow);
        require(dt_ctrl >= ctl.dt_min, ErrorCode::StepRejected,
                "step size fell below dt_min at t = " + std::to_string(state.t));
      }
    }
    record(state, &prev);
  }

  // Monitor c: sup-curvature growth against t.
  if (config.monitors.c) {
    std::vector<double> lt, lk;
    for (const auto& tk : rep.ticks) {
      const double k = std::max({tk.sup_A, tk.sup_B, tk.sup_C});
      if (tk.t > 0.0 && k > 0.0) {
        lt.push_back(std::log(tk.t));
        lk.push_back(std::log(k));
      }
    }
    if (lt.size() >= 2) {
      rep.curvature_exponent = fit::linear(lt, lk).slope;
      MonitorResidual m;
      m.id = 'c';
      m.t = state.t;
      m.residual = rep.curvature_exponent + 1.0;
      m.violation = m.residual < -config.monitor_tol;
      rep.ledger.push_back(m);
      if (m.violation) ++rep.violations;
    }
  }
  for (const auto& m : rep.ledger)
    if (m.id == 'e') rep.c7_fit = std::max(rep.c7_fit, m.residual);
  rep.final_state = std::move(state);
  return rep;
}

SequenceReport flow_sequence_experiment(const ProfilePtr& xi, const ProfilePtr& xihat,
                                        std::span<const double> k_list,
                                        const FlowConfig& config, int n, double R, double t1,
                                        double t2) {
  const auto analysis =
      RadialGrid::log_uniform(1e-6, std::max(1e6, config.grid->r_max()), 2048);
  approx::BlendOptions bo;
  bo.n = n;
  bo.verify = false;
  const auto blend = approx::blend_sequence(xi, xihat, k_list, analysis, bo);

  SequenceReport rep;
  const auto& g = *config.grid;
  std::size_t window = 0;
  while (window < g.size() && g.r(window) <= R) ++window;

  for (const auto& e : blend.entries) {
    SequenceRun sr;
    sr.k = e.k;
    FlowConfig cfg = config;
    cfg.keep_snapshots = true;
    sr.report = run(cfg, RadialMetric::from_profile(e.profile, n, analysis));
    const auto& F = sr.report.f_snapshots;
    const auto& H = sr.report.h_snapshots;
    for (std::size_t j = 1; j < F.size(); ++j) {
      double d = 0.0;
      for (std::size_t i = 0; i < window; ++i)
        d = std::max({d, std::abs(F[j][i] / F[0][i] - 1.0), std::abs(H[j][i] / H[0][i] - 1.0)});
      sr.deviation.push_back(d);
    }
    sr.deviation_monotone = true;
    for (std::size_t j = 1; j < sr.deviation.size(); ++j)
      if (sr.deviation[j] < sr.deviation[j - 1]) sr.deviation_monotone = false;
    // smallest c with sqrt((n + c t)(2 c t)) >= deviation at every tick
    auto dominates = [&](double c) {
      for (std::size_t j = 0; j < sr.deviation.size(); ++j) {
        const double t = sr.report.ticks[j + 1].t;
        if (std::sqrt((n + c * t) * (2.0 * c * t)) < sr.deviation[j]) return false;
      }
      return true;
    };
    double lo = 0.0, hi = 1.0;
    while (!dominates(hi) && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dominates(mid) ? hi : lo) = mid;
    }
    sr.w_fit = hi;
    rep.runs.push_back(std::move(sr));
  }
  for (const auto& tk : rep.runs.front().report.ticks) rep.tick_times.push_back(tk.t);

  for (std::size_t k = 1; k < rep.runs.size(); ++k) {
    const auto& a = rep.runs[k - 1].report;
    const auto& b = rep.runs[k].report;
    double d = 0.0;
    for (std::size_t j = 0; j < a.ticks.size(); ++j) {
      const double t = a.ticks[j].t;
      if (t < t1 * (1.0 - 1e-12) || t > t2 * (1.0 + 1e-12)) continue;
      for (std::size_t i = 0; i < window; ++i)
        d = std::max({d, std::abs(a.f_snapshots[j][i] / b.f_snapshots[j][i] - 1.0),
                      std::abs(a.h_snapshots[j][i] / b.h_snapshots[j][i] - 1.0)});
    }
    rep.cauchy.push_back(d);
  }
  rep.cauchy_decreasing = true;
  for (std::size_t j = 1; j < rep.cauchy.size(); ++j)
    if (!(rep.cauchy[j] < rep.cauchy[j - 1])) rep.cauchy_decreasing = false;
  return rep;
}

GridPtr default_flow_grid(double rho0, double r_max, std::size_t nodes) {
  return RadialGrid::sinh_cell_centered(rho0, r_max, nodes);
}

}  // namespace kahlerlab::flow
