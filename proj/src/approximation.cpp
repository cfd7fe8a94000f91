#include "kahlerlab/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kahlerlab/error.hpp"
#include "kahlerlab/fit.hpp"
#include "kahlerlab/quadrature.hpp"

namespace kahlerlab::approx {

namespace {

double step_value(CutoffShape s, double x) {
  return s == CutoffShape::Exp ? smooth_step(x) : quintic_step(x);
}
double step_prime(CutoffShape s, double x) {
  return s == CutoffShape::Exp ? smooth_step_prime(x) : quintic_step_prime(x);
}
double step_second(CutoffShape s, double x) {
  return s == CutoffShape::Exp ? smooth_step_second(x) : quintic_step_second(x);
}

std::vector<double> merged_breaks(const XiProfile& a, const XiProfile& b) {
  auto out = a.breakpoints();
  for (double x : b.breakpoints()) out.push_back(x);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// int_lo^hi |xi - xihat| / t dt in t; `finite` reports blow-ups.
double abs_budget(const XiProfile& xi, const XiProfile& xihat, double lo, double hi,
                  bool& finite) {
  if (hi <= lo) return 0.0;
  std::vector<double> breaks;
  for (double b : merged_breaks(xi, xihat))
    if (b > lo && b < hi) breaks.push_back(b);
  auto fn = [&](double t) {
    const double v = std::abs(xi.eval(t) - xihat.eval(t)) / t;
    if (!std::isfinite(v)) {
      finite = false;
      return 0.0;
    }
    return v;
  };
  const auto res = quad::gauss_kronrod(fn, lo, hi, breaks, 1e-13, 1e-12, 4000);
  return res.value;
}

// int_0^r |xi - xihat| / t dt, integrated in s = log t past a short linear segment.
double abs_integral_from_origin(const XiProfile& xi, const XiProfile& xihat, double r) {
  constexpr double eps = 1e-8;
  if (r <= 0.0) return 0.0;
  const double d = std::abs(xi.eval_prime(0.0) - xihat.eval_prime(0.0));
  if (r <= eps) return d * r;
  std::vector<double> breaks;
  for (double b : merged_breaks(xi, xihat))
    if (b > eps && b < r) breaks.push_back(std::log(b));
  auto fn = [&](double s) {
    const double t = std::exp(s);
    return std::abs(xi.eval(t) - xihat.eval(t));
  };
  const auto res = quad::gauss_kronrod(fn, std::log(eps), std::log(r), breaks, 1e-11, 1e-12,
                                       20000);
  require(std::isfinite(res.value), ErrorCode::NonFiniteProfile,
          "|xi - xihat|/t is not integrable");
  return d * eps + res.value;
}

double golden_max(const std::function<double(double)>& fn, double a, double b, double& arg) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = fn(d);
    }
  }
  arg = 0.5 * (a + b);
  return fn(arg);
}

constexpr double kRhoLo = 1.25;
constexpr double kRhoHi = 2.75;

// int_1^3 rho(x)/x dx
double rho_log_integral(double alpha) {
  auto fn = [alpha](double x) { return hat_rho(x, alpha) / x; };
  const double mid = quad::gauss_kronrod(fn, kRhoLo, kRhoHi, 1e-14, 1e-14).value;
  return std::log(kRhoLo) + mid + alpha * std::log(3.0 / kRhoHi);
}

class HatProfile final : public XiProfile {
 public:
  HatProfile(HatCase tag, double alpha, std::vector<double> a)
      : tag_(tag), alpha_(alpha), a_(std::move(a)) {}

  double eval(double r) const override {
    if (r <= 0.0) return 0.0;
    switch (tag_) {
      case HatCase::Case1:
        return smooth_step(r);
      case HatCase::Case2:
        return alpha_ * smooth_step(r);
      default:
        break;
    }
    if (r < a_.front()) return smooth_step(r / kLead);
    const std::size_t j = block_index(r);
    const double x = r / a_[j];
    const std::size_t m = a_.size() - 1;
    if (j % 2 == 0) {
      if (j == m) return 1.0;
      return x <= 3.0 ? hat_rho(x, alpha_) : alpha_;
    }
    return x <= 3.0 ? 1.0 + alpha_ - hat_rho(x, alpha_) : 1.0;
  }

  double eval_prime(double r) const override {
    if (r <= 0.0) return 0.0;
    switch (tag_) {
      case HatCase::Case1:
        return smooth_step_prime(r);
      case HatCase::Case2:
        return alpha_ * smooth_step_prime(r);
      default:
        break;
    }
    if (r < a_.front()) return smooth_step_prime(r / kLead) / kLead;
    const std::size_t j = block_index(r);
    const double x = r / a_[j];
    if (j % 2 == 0) {
      if (j == a_.size() - 1 || x > 3.0) return 0.0;
      return hat_rho_prime(x, alpha_) / a_[j];
    }
    return x <= 3.0 ? -hat_rho_prime(x, alpha_) / a_[j] : 0.0;
  }

  double support_max() const override {
    if (tag_ != HatCase::Case3) return 1.0;
    const std::size_t m = a_.size() - 1;
    return m % 2 == 0 ? a_.back() : 3.0 * a_.back();
  }

  std::vector<double> breakpoints() const override {
    std::vector<double> out{kLead, 1.0};
    if (tag_ == HatCase::Case3)
      for (double a : a_) {
        out.push_back(kRhoLo * a);
        out.push_back(kRhoHi * a);
      }
    return out;
  }

  std::string name() const override { return "hat(" + to_string(tag_) + ")"; }

 private:
  static constexpr double kLead = 0.75;

  std::size_t block_index(double r) const {
    auto it = std::upper_bound(a_.begin(), a_.end(), r);
    return static_cast<std::size_t>(it - a_.begin()) - 1;
  }

  HatCase tag_;
  double alpha_;
  std::vector<double> a_;
};

// First r > start (grid order) where base + int_start^r (xi - level)/t crosses
// target, refined by bisection in log r.
std::optional<double> first_crossing(const ProfileIntegrals& pi, double start, double base,
                                     double level, double target, bool upward) {
  const auto& g = *pi.grid();
  const double I0 = pi.at(start).I;
  auto S = [&](double r, double Ir) { return base + (Ir - I0) - level * std::log(r / start); };
  auto crossed = [&](double v) { return upward ? v >= target : v <= target; };
  require(!crossed(base), ErrorCode::RootNotBracketed,
          "running integral already past the threshold at 3a (hypothesis violated)");
  double prev = start;
  for (std::size_t i = g.first(); i < g.size(); ++i) {
    const double r = g.r(i);
    if (r <= start) continue;
    if (crossed(S(r, pi.node(i).I))) {
      double lo = std::log(prev), hi = std::log(r);
      while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        const double rm = std::exp(mid);
        if (crossed(S(rm, pi.at(rm).I)))
          hi = mid;
        else
          lo = mid;
      }
      return std::exp(hi);
    }
    prev = r;
  }
  return std::nullopt;
}

}  // namespace

double Cutoff::operator()(double r) const {
  return 1.0 - step_value(shape, (r - k) / delta);
}
double Cutoff::prime(double r) const { return -step_prime(shape, (r - k) / delta) / delta; }
double Cutoff::second(double r) const {
  return -step_second(shape, (r - k) / delta) / (delta * delta);
}

Cutoff smooth_cutoff(double k, double delta, CutoffShape shape) {
  require(delta > 0.0, ErrorCode::InvalidArgument, "cutoff width must be positive");
  return {k, delta, shape};
}

DeltaResult find_delta_k(const XiProfile& xi, const XiProfile& xihat, double k, double r_max) {
  require(k >= 1.0, ErrorCode::InvalidArgument, "k must be >= 1");
  require(k < r_max, ErrorCode::ProfileMismatchDomain, "k lies beyond the profile domain");
  const double cap = std::min(1.0, r_max - k);
  const double budget = 1.0 / k;
  DeltaResult out;
  bool blew_up = false;
  auto used = [&](double d, bool& fin) {
    fin = true;
    const double v = abs_budget(xi, xihat, k, k + d, fin);
    if (!fin) blew_up = true;
    return v;
  };
  auto solve = [&](double target) {
    bool fin = true;
    const double at_cap = used(cap, fin);
    if (fin && at_cap <= target) {
      out.delta = cap;
      out.capped = cap == 1.0;
      return;
    }
    double lo = 0.0, hi = cap;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double v = used(mid, fin);
      (fin && v <= target ? lo : hi) = mid;
    }
    out.delta = lo;
  };
  solve(budget);
  if (blew_up) {
    out.halved = true;
    solve(0.5 * budget);
  }
  bool dummy = true;
  out.budget_used = abs_budget(xi, xihat, k, k + out.delta, dummy);
  return out;
}

BlendProfile::BlendProfile(ProfilePtr xi, ProfilePtr xihat, Cutoff eta)
    : xi_(std::move(xi)), xihat_(std::move(xihat)), eta_(eta) {}

double BlendProfile::eval(double r) const {
  const double e = eta_(r);
  if (e == 1.0) return xi_->eval(r);
  if (e == 0.0) return xihat_->eval(r);
  return e * xi_->eval(r) + (1.0 - e) * xihat_->eval(r);
}

double BlendProfile::eval_prime(double r) const {
  const double e = eta_(r);
  if (e == 1.0) return xi_->eval_prime(r);
  if (e == 0.0) return xihat_->eval_prime(r);
  return e * xi_->eval_prime(r) + (1.0 - e) * xihat_->eval_prime(r) +
         eta_.prime(r) * (xi_->eval(r) - xihat_->eval(r));
}

double BlendProfile::support_max() const {
  const double s = xihat_->support_max();
  return std::isfinite(s) ? std::max(s, eta_.k + eta_.delta) : s;
}

std::vector<double> BlendProfile::breakpoints() const {
  std::vector<double> out;
  for (double b : xi_->breakpoints())
    if (b < eta_.k + eta_.delta) out.push_back(b);
  for (double b : xihat_->breakpoints())
    if (b > eta_.k) out.push_back(b);
  out.push_back(eta_.k);
  out.push_back(eta_.k + eta_.delta);
  std::sort(out.begin(), out.end());
  return out;
}

std::string BlendProfile::name() const {
  std::ostringstream os;
  os << "blend(" << xi_->name() << "," << xihat_->name() << ",k=" << eta_.k << ")";
  return os.str();
}

std::vector<double> blend_running_integral(const XiProfile& xi, const XiProfile& xihat,
                                           const GridPtr& grid) {
  // Non-owning pointers: the integrals do not outlive this call.
  ProfilePtr p(&xi, [](const XiProfile*) {});
  ProfilePtr q(&xihat, [](const XiProfile*) {});
  ProfileIntegrals a(p, grid), b(q, grid);
  std::vector<double> J(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) J[i] = a.node(i).I - b.node(i).I;
  return J;
}

BlendReport blend_sequence(const ProfilePtr& xi, const ProfilePtr& xihat,
                           std::span<const double> k_list, const GridPtr& grid,
                           const BlendOptions& opt) {
  ProfileIntegrals a(xi, grid), b(xihat, grid);
  std::vector<double> J(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) J[i] = a.node(i).I - b.node(i).I;

  BlendReport rep;
  const auto tail = fit::semilog_tail(grid->radii(), J, 2.0);
  rep.J_tail_slope = tail.exponent;

  const auto it = std::max_element(J.begin(), J.end());
  const std::size_t im = static_cast<std::size_t>(it - J.begin());
  rep.c = std::max(0.0, *it);
  rep.c_at = grid->r(im);
  if (im >= grid->first() && *it > 0.0) {
    const double lo = grid->u_of_r(grid->r(std::max(im, grid->first() + 1) - 1));
    const double hi = grid->u_of_r(grid->r(std::min(im + 1, grid->size() - 1)));
    auto Jexact = [&](double u) {
      const double r = grid->r_of_u(u);
      return a.at(r).I - b.at(r).I;
    };
    double arg = 0.0;
    const double refined = golden_max(Jexact, lo, hi, arg);
    if (refined > rep.c) {
      rep.c = refined;
      rep.c_at = grid->r_of_u(arg);
    }
  }

  if (opt.declared_c && rep.c > *opt.declared_c + 1e-10)
    fail(ErrorCode::HypothesisFailed, "running integral of (xi - xihat)/t exceeds the declared c");
  if (rep.J_tail_slope > 0.01)
    fail(ErrorCode::HypothesisFailed,
         "running integral of (xi - xihat)/t grows without bound (tail slope " +
             std::to_string(rep.J_tail_slope) + ")");

  std::optional<RadialMetric> ghat;
  if (opt.verify) ghat = RadialMetric::from_profile(xihat, opt.n, grid);

  for (double k : k_list) {
    BlendEntry e;
    e.k = k;
    e.delta = find_delta_k(*xi, *xihat, k, grid->r_max());
    const auto eta = smooth_cutoff(k, e.delta.delta, opt.shape);
    e.profile = std::make_shared<BlendProfile>(xi, xihat, eta);
    e.lower = std::exp(-rep.c - 1.0 / k);
    e.upper = std::exp(abs_integral_from_origin(*xi, *xihat, k + e.delta.delta));
    if (opt.verify) {
      const auto hk = RadialMetric::from_profile(e.profile, opt.n, grid);
      const auto rel = relative_nodes(hk, *ghat);
      e.measured_min = rel.min_lambda;
      e.measured_max = rel.max_lambda;
      e.verified = rel.min_lambda >= e.lower * (1.0 - 1e-9) &&
                   rel.max_lambda <= e.upper * (1.0 + 1e-9);
    }
    rep.entries.push_back(std::move(e));
  }

  std::vector<double> local;
  for (std::size_t i = 1; i < rep.entries.size(); ++i) {
    const auto &p = rep.entries[i - 1], &q = rep.entries[i];
    if (q.k > p.k)
      local.push_back((std::log(q.upper) - std::log(p.upper)) / (std::log(q.k) - std::log(p.k)));
  }
  if (!local.empty()) {
    rep.log_ck_slope = local.back();
    const bool decaying = local.size() >= 2 && local.back() < 0.9 * local[local.size() - 2];
    rep.ck_divergent = rep.log_ck_slope > 0.05 && !decaying;
  }
  return rep;
}

std::string to_string(HatCase c) {
  switch (c) {
    case HatCase::Case1:
      return "Case1";
    case HatCase::Case2:
      return "Case2";
    case HatCase::Case3:
      return "Case3";
    case HatCase::Indeterminate:
      return "Indeterminate";
  }
  return "?";
}

HatClassification classify_hat_case(const XiProfile& xi, double alpha, double beta,
                                    const GridPtr& grid) {
  require(alpha <= 0.0, ErrorCode::InvalidArgument, "alpha must be <= 0");
  ProfilePtr p(&xi, [](const XiProfile*) {});
  ProfileIntegrals pi(p, grid);
  const double I1 = pi.at(1.0).I;

  const std::size_t n = grid->size();
  std::vector<double> P(n, 0.0), Q(n, 0.0);
  HatClassification out;
  double minX = std::numeric_limits<double>::infinity(), minY = minX;
  for (std::size_t i = grid->first(); i < n; ++i) {
    const double r = grid->r(i);
    const double I = pi.node(i).I - I1;
    P[i] = I - std::log(r);
    Q[i] = alpha * std::log(r) - I;
    minX = std::min(minX, P[i]);
    minY = std::min(minY, Q[i]);
    out.drawup_upper = std::max(out.drawup_upper, P[i] - minX);
    out.drawup_lower = std::max(out.drawup_lower, Q[i] - minY);
  }
  if (out.drawup_upper > beta + 1e-8 || out.drawup_lower > beta + 1e-8)
    fail(ErrorCode::HypothesisFailed,
         "one-sided integral bounds exceed beta (drawups " + std::to_string(out.drawup_upper) +
             ", " + std::to_string(out.drawup_lower) + ")");

  const auto r = grid->radii().subspan(grid->first());
  const std::span<const double> Ps(P.data() + grid->first(), r.size());
  const std::span<const double> Qs(Q.data() + grid->first(), r.size());
  out.slope_upper = fit::semilog_tail(r, Ps, 2.0).exponent;
  out.slope_lower = fit::semilog_tail(r, Qs, 2.0).exponent;

  std::ostringstream diag;
  diag << "tail slopes: int(xi-1)/t " << out.slope_upper << ", int(alpha-xi)/t "
       << out.slope_lower;
  out.diagnostics = diag.str();
  if (out.slope_upper >= -0.01)
    out.tag = HatCase::Case1;
  else if (out.slope_lower >= -0.01)
    out.tag = HatCase::Case2;
  else if (out.slope_upper <= -0.05 && out.slope_lower <= -0.05)
    out.tag = HatCase::Case3;
  return out;
}

double hat_rho(double t, double alpha) {
  return 1.0 - (1.0 - alpha) * quintic_step((t - kRhoLo) / (kRhoHi - kRhoLo));
}

double hat_rho_prime(double t, double alpha) {
  return -(1.0 - alpha) * quintic_step_prime((t - kRhoLo) / (kRhoHi - kRhoLo)) /
         (kRhoHi - kRhoLo);
}

HatConstruction construct_hat_xi(const ProfilePtr& xi, HatCase tag, double alpha,
                                 double beta, const GridPtr& grid, bool allow_partial) {
  require(alpha <= 0.0, ErrorCode::InvalidArgument, "alpha must be <= 0");
  require(tag != HatCase::Indeterminate, ErrorCode::InvalidArgument,
          "cannot construct a reference profile for an indeterminate case");
  HatConstruction out;
  out.tag = tag;
  out.alpha = alpha;
  out.beta = beta;

  std::optional<ProfileIntegrals> pi;
  if (tag == HatCase::Case3) {
    out.c3 = beta + (1.0 - alpha) * std::log(3.0) + 1.0;
    pi.emplace(xi, grid);
    const double rho_int = rho_log_integral(alpha);
    std::vector<double> a{1.0};
    while (3.0 * a.back() < grid->r_max()) {
      const double s = a.back();
      const bool descent = a.size() % 2 == 1;
      const double seg = pi->at(3.0 * s).I - pi->at(s).I;
      const double base =
          descent ? seg - rho_int : seg - ((1.0 + alpha) * std::log(3.0) - rho_int);
      const auto next = first_crossing(*pi, 3.0 * s, base, descent ? alpha : 1.0,
                                       descent ? out.c3 : -out.c3, descent);
      if (!next) break;
      a.push_back(*next);
    }
    out.a = std::move(a);
    out.blocks_completed = static_cast<int>((out.a.size() - 1) / 2);
  }
  out.profile = std::make_shared<HatProfile>(tag, alpha, out.a.empty() ? std::vector<double>{1.0}
                                                                        : out.a);

  ProfileIntegrals hat(out.profile, grid);
  out.range_ok = true;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double r = grid->r(i);
    const double v = out.profile->eval(r);
    if (v < alpha - 1e-14 || v > 1.0 + 1e-14) out.range_ok = false;
    out.c2 = std::max(out.c2, std::abs(out.profile->eval_prime(r)) / hat.node(i).h);
  }

  if (tag == HatCase::Case3) {
    auto D = [&](double r) { return pi->at(r).I - hat.at(r).I; };
    for (int b = 0; b < out.blocks_completed; ++b) {
      const double lo = out.a[2 * b], hi = out.a[2 * b + 2];
      const double d0 = D(lo);
      out.block_integrals.push_back(D(hi) - d0);
      for (std::size_t i = grid->first(); i < grid->size(); ++i) {
        const double r = grid->r(i);
        if (r < lo || r >= hi) continue;
        out.max_running = std::max(
            out.max_running, std::abs(pi->node(i).I - hat.node(i).I - d0));
      }
      out.max_running = std::max(out.max_running, std::abs(D(out.a[2 * b + 1]) - d0));
    }
    out.usable = out.blocks_completed >= 2 && out.range_ok;
    if (out.blocks_completed < 2 && !allow_partial)
      fail(ErrorCode::BlocksIncomplete,
           "only " + std::to_string(out.blocks_completed) +
               " complete block(s) fit below r_max = " + std::to_string(grid->r_max()));
  } else {
    out.usable = out.range_ok;
  }
  return out;
}

CutoffPotentialResult cutoff_potential(const RadialMetric& base, const RadialPotential& u,
                                       double k, double tol, CutoffShape shape) {
  const auto eta = smooth_cutoff(k, k, shape);
  const auto& grid = base.grid();

  double cross = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double r = grid->r(i);
    const double ep = eta.prime(r);
    if (ep == 0.0 && eta.second(r) == 0.0) continue;
    const double uv = u.u(r), up = u.u_prime(r);
    const double in_f = ep * uv;
    const double in_h = ep * uv + r * (eta.second(r) * uv + 2.0 * ep * up);
    cross = std::max({cross, std::abs(in_f) / base.f()[i], std::abs(in_h) / base.h()[i]});
  }
  if (cross > tol)
    fail(ErrorCode::CrossTermTooLarge,
         "cutoff cross terms reach " + std::to_string(cross) + " of the base metric");

  const auto full = metric_from_potential(base, u);
  const auto rel_full = relative_nodes(full, base);

  RadialPotential uk;
  uk.u = [=](double r) { return eta(r) * u.u(r); };
  uk.u_prime = [=](double r) { return eta.prime(r) * u.u(r) + eta(r) * u.u_prime(r); };
  uk.u_second = [=](double r) {
    return eta.second(r) * u.u(r) + 2.0 * eta.prime(r) * u.u_prime(r) +
           eta(r) * u.u_second(r);
  };
  CutoffPotentialResult out{metric_from_potential(base, uk)};
  out.cross_term = cross;
  out.A = std::max(rel_full.max_lambda, 1.0 / rel_full.min_lambda);
  const auto rel = relative_nodes(out.metric, base);
  out.lambda_min = rel.min_lambda;
  out.lambda_max = rel.max_lambda;
  out.sandwich_holds = rel.min_lambda >= 1.0 / (2.0 * out.A) && rel.max_lambda <= 2.0 * out.A;
  return out;
}

}  // namespace kahlerlab::approx
