#include "kahlerlab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kahlerlab/error.hpp"
#include "kahlerlab/quadrature.hpp"

namespace kahlerlab {

namespace {

double psi(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double psi_prime(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

double get(const std::map<std::string, double>& params, const std::string& key,
           double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

class Flat final : public XiProfile {
 public:
  double eval(double) const override { return 0.0; }
  double eval_prime(double) const override { return 0.0; }
  double support_max() const override { return 0.0; }
  std::string name() const override { return "flat"; }
};

class Rational final : public XiProfile {
 public:
  explicit Rational(double scale) : scale_(scale) {}
  double eval(double r) const override { return scale_ * r / (1.0 + r); }
  double eval_prime(double r) const override { return scale_ / ((1.0 + r) * (1.0 + r)); }
  std::string name() const override { return "rational(" + fmt(scale_) + ")"; }

 private:
  double scale_;
};

class EventuallyConstant final : public XiProfile {
 public:
  EventuallyConstant(double a, double r0) : a_(a), r0_(r0) {}
  double eval(double r) const override { return a_ * smooth_step(r / r0_); }
  double eval_prime(double r) const override { return a_ * smooth_step_prime(r / r0_) / r0_; }
  double support_max() const override { return r0_; }
  std::vector<double> breakpoints() const override { return {r0_}; }
  std::string name() const override {
    return "eventually_constant(" + fmt(a_) + "," + fmt(r0_) + ")";
  }

 private:
  double a_, r0_;
};

class PolyCap final : public XiProfile {
 public:
  explicit PolyCap(double level) : level_(level) {}
  double eval(double r) const override {
    if (r >= 1.0) return level_;
    const double q = 1.0 - r;
    return level_ * (1.0 - q * q * q * q);
  }
  double eval_prime(double r) const override {
    if (r >= 1.0) return 0.0;
    const double q = 1.0 - r;
    return 4.0 * level_ * q * q * q;
  }
  double support_max() const override { return 1.0; }
  std::vector<double> breakpoints() const override { return {1.0}; }
  std::string name() const override { return "poly_cap(" + fmt(level_) + ")"; }

 private:
  double level_;
};

class Oscillator final : public XiProfile {
 public:
  explicit Oscillator(double alpha) : alpha_(alpha) {}
  double eval(double r) const override {
    if (r <= 0.0) return 0.0;
    return smooth_step(r) * wave(r);
  }
  double eval_prime(double r) const override {
    if (r <= 0.0) return 0.0;
    const double dwave = 0.5 * (1.0 - alpha_) * std::cos(std::log(r)) / r;
    return smooth_step_prime(r) * wave(r) + smooth_step(r) * dwave;
  }
  std::vector<double> breakpoints() const override { return {1.0}; }
  std::string name() const override { return "oscillator(" + fmt(alpha_) + ")"; }

 private:
  double wave(double r) const {
    return alpha_ + 0.5 * (1.0 - alpha_) * (1.0 + std::sin(std::log(r)));
  }
  double alpha_;
};

class LogCap final : public XiProfile {
 public:
  double eval(double r) const override {
    if (r <= 0.0) return 0.0;
    return smooth_step(r) * (1.0 + 1.0 / std::log(std::numbers::e + r));
  }
  double eval_prime(double r) const override {
    if (r <= 0.0) return 0.0;
    const double L = std::log(std::numbers::e + r);
    return smooth_step_prime(r) * (1.0 + 1.0 / L) -
           smooth_step(r) / ((std::numbers::e + r) * L * L);
  }
  std::vector<double> breakpoints() const override { return {1.0}; }
  std::string name() const override { return "log_cap"; }
};

class UnboundedCurvature final : public XiProfile {
 public:
  double eval(double r) const override {
    if (r <= 0.0) return 0.0;
    return smooth_step(r) * (0.9 + 0.1 * std::sin(std::sqrt(r)));
  }
  double eval_prime(double r) const override {
    if (r <= 0.0) return 0.0;
    const double p = std::sqrt(r);
    return smooth_step_prime(r) * (0.9 + 0.1 * std::sin(p)) +
           smooth_step(r) * 0.05 * std::cos(p) / p;
  }
  std::vector<double> breakpoints() const override { return {1.0}; }
  std::string name() const override { return "unbounded_curvature"; }
};

class Bump final : public XiProfile {
 public:
  Bump(double center, double width, double amplitude)
      : center_(center), width_(width), amplitude_(amplitude) {
    require(width > 0.0 && center - width >= 0.0, ErrorCode::InvalidArgument,
            "bump must have positive width and sit inside r >= 0");
  }
  double eval(double r) const override {
    const double x = (r - center_) / width_;
    if (std::abs(x) >= 1.0) return 0.0;
    return amplitude_ * std::exp(1.0 - 1.0 / (1.0 - x * x));
  }
  double eval_prime(double r) const override {
    const double x = (r - center_) / width_;
    if (std::abs(x) >= 1.0) return 0.0;
    const double q = 1.0 - x * x;
    return amplitude_ * std::exp(1.0 - 1.0 / q) * (-2.0 * x / (q * q)) / width_;
  }
  double support_max() const override { return center_ + width_; }
  std::vector<double> breakpoints() const override {
    return {center_ - width_, center_, center_ + width_};
  }
  std::string name() const override {
    return "bump(" + fmt(center_) + "," + fmt(width_) + "," + fmt(amplitude_) + ")";
  }

 private:
  double center_, width_, amplitude_;
};

class Combination final : public XiProfile {
 public:
  Combination(ProfilePtr p, double a, ProfilePtr q, double b)
      : p_(std::move(p)), q_(std::move(q)), a_(a), b_(b) {}
  double eval(double r) const override { return a_ * p_->eval(r) + b_ * q_->eval(r); }
  double eval_prime(double r) const override {
    return a_ * p_->eval_prime(r) + b_ * q_->eval_prime(r);
  }
  double support_max() const override { return std::max(p_->support_max(), q_->support_max()); }
  std::vector<double> breakpoints() const override {
    auto out = p_->breakpoints();
    for (double x : q_->breakpoints()) out.push_back(x);
    return out;
  }
  std::string name() const override {
    return fmt(a_) + "*" + p_->name() + "+" + fmt(b_) + "*" + q_->name();
  }

 private:
  ProfilePtr p_, q_;
  double a_, b_;
};

class Tabulated final : public XiProfile {
 public:
  Tabulated(std::vector<double> r, std::vector<double> xi, std::vector<double> xp)
      : r_(std::move(r)), xi_(std::move(xi)), xp_(std::move(xp)) {
    require(r_.size() >= 2 && r_.size() == xi_.size() && r_.size() == xp_.size(),
            ErrorCode::InvalidArgument, "tabulated profile needs matching columns (>= 2 knots)");
    require(r_.front() == 0.0, ErrorCode::InvalidArgument, "tabulated knots must start at 0");
    require(xi_.front() == 0.0, ErrorCode::InvalidArgument, "tabulated profile needs xi(0) = 0");
    for (std::size_t i = 1; i < r_.size(); ++i)
      require(r_[i] > r_[i - 1], ErrorCode::InvalidArgument, "tabulated knots must increase");
    for (std::size_t i = 0; i < r_.size(); ++i)
      require(std::isfinite(xi_[i]) && std::isfinite(xp_[i]), ErrorCode::NonFiniteProfile,
              "tabulated profile has non-finite entries");
  }
  double eval(double r) const override {
    if (r >= r_.back()) return xi_.back();
    const auto [i, t, h] = find(r);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * xi_[i] + (t3 - 2 * t2 + t) * h * xp_[i] +
           (-2 * t3 + 3 * t2) * xi_[i + 1] + (t3 - t2) * h * xp_[i + 1];
  }
  double eval_prime(double r) const override {
    if (r >= r_.back()) return 0.0;
    const auto [i, t, h] = find(r);
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * xi_[i] + (-6 * t2 + 6 * t) * xi_[i + 1]) / h +
           (3 * t2 - 4 * t + 1) * xp_[i] + (3 * t2 - 2 * t) * xp_[i + 1];
  }
  double support_max() const override { return r_.back(); }
  std::vector<double> breakpoints() const override { return r_; }
  bool tabulated() const override { return true; }
  std::string name() const override { return "tabulated(" + std::to_string(r_.size()) + ")"; }

 private:
  struct Cell {
    std::size_t i;
    double t;
    double h;
  };
  Cell find(double r) const {
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - r_.begin() - 1));
    i = std::min(i, r_.size() - 2);
    const double h = r_[i + 1] - r_[i];
    return {i, (r - r_[i]) / h, h};
  }
  std::vector<double> r_, xi_, xp_;
};

}  // namespace

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = psi(x), b = psi(1.0 - x);
  return a / (a + b);
}

double smooth_step_prime(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = psi(x), b = psi(1.0 - x);
  const double s = a + b;
  return (psi_prime(x) * b + a * psi_prime(1.0 - x)) / (s * s);
}

// S' = S (1 - S) p with p = 1/x^2 + 1/(1-x)^2.
double smooth_step_second(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double S = smooth_step(x);
  const double y = 1.0 - x;
  const double p = 1.0 / (x * x) + 1.0 / (y * y);
  const double dp = -2.0 / (x * x * x) + 2.0 / (y * y * y);
  const double s1 = S * (1.0 - S) * p;
  return s1 * (1.0 - 2.0 * S) * p + S * (1.0 - S) * dp;
}

double quintic_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

double quintic_step_prime(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double q = x * (1.0 - x);
  return 30.0 * q * q;
}

double quintic_step_second(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

namespace profiles {

ProfilePtr flat() { return std::make_shared<Flat>(); }
ProfilePtr rational(double scale) { return std::make_shared<Rational>(scale); }
ProfilePtr eventually_constant(double a, double r0) {
  require(r0 > 0.0, ErrorCode::InvalidArgument, "eventually_constant needs r0 > 0");
  return std::make_shared<EventuallyConstant>(a, r0);
}
ProfilePtr poly_cap(double level) { return std::make_shared<PolyCap>(level); }
ProfilePtr oscillator(double alpha) { return std::make_shared<Oscillator>(alpha); }
ProfilePtr log_cap() { return std::make_shared<LogCap>(); }
ProfilePtr unbounded_curvature() { return std::make_shared<UnboundedCurvature>(); }
ProfilePtr bump(double center, double width, double amplitude) {
  return std::make_shared<Bump>(center, width, amplitude);
}
ProfilePtr combination(ProfilePtr p, double a, ProfilePtr q, double b) {
  return std::make_shared<Combination>(std::move(p), a, std::move(q), b);
}
ProfilePtr tabulated(std::vector<double> r, std::vector<double> xi,
                     std::vector<double> xi_prime) {
  return std::make_shared<Tabulated>(std::move(r), std::move(xi), std::move(xi_prime));
}

ProfilePtr make(const std::string& family, const std::map<std::string, double>& params) {
  if (family == "flat") return flat();
  if (family == "cigar") return rational(1.0);
  if (family == "rational") return rational(get(params, "scale", 1.0));
  if (family == "nonpositive") return rational(-get(params, "scale", 1.0));
  if (family == "eventually_constant")
    return eventually_constant(get(params, "a", 0.5), get(params, "r0", 10.0));
  if (family == "poly_cap") return poly_cap(get(params, "level", 1.0));
  if (family == "oscillator") return oscillator(get(params, "alpha", -1.0));
  if (family == "log_cap") return log_cap();
  if (family == "unbounded_curvature") return unbounded_curvature();
  if (family == "bump")
    return bump(get(params, "center", 5.0), get(params, "width", 1.0),
                get(params, "amplitude", 0.1));
  fail(ErrorCode::ConfigInvalid, "unknown profile family '" + family + "'");
}

}  // namespace profiles

double xi_second_at_origin(const XiProfile& profile) {
  constexpr double step = 1e-4;
  return (profile.eval_prime(step) - profile.eval_prime(0.0)) / step;
}

double integrate_singular(const XiProfile& profile, double r, const QuadOptions& opt) {
  require(r >= 0.0, ErrorCode::OutOfDomain, "integrate_singular needs r >= 0");
  const double d1 = profile.eval_prime(0.0);
  const double d2 = xi_second_at_origin(profile);
  require(std::isfinite(d1) && std::isfinite(d2), ErrorCode::NonFiniteProfile,
          "xi' is not finite at the origin");
  const double eps = std::min(opt.eps, r);
  double total = d1 * eps + 0.25 * d2 * eps * eps;
  if (r <= opt.eps) return total;

  bool finite = true;
  auto integrand = [&](double s) {
    const double v = profile.eval(std::exp(s));
    if (!std::isfinite(v)) finite = false;
    return v;
  };
  std::vector<double> breaks;
  for (double b : profile.breakpoints())
    if (b > 0.0) breaks.push_back(std::log(b));
  const auto res = quad::gauss_kronrod(integrand, std::log(opt.eps), std::log(r), breaks,
                                       opt.tol, 0.0, 20000);
  require(finite, ErrorCode::NonFiniteProfile, "xi is not finite on [0, r]");
  require(res.converged, ErrorCode::ToleranceNotMet,
          "adaptive quadrature did not reach the tolerance");
  return total + res.value;
}

ProfileIntegrals::ProfileIntegrals(ProfilePtr profile, GridPtr grid, const QuadOptions& opt)
    : profile_(std::move(profile)), grid_(std::move(grid)), opt_(opt) {
  xi1_ = profile_->eval_prime(0.0);
  xi2_ = xi_second_at_origin(*profile_);
  require(std::isfinite(xi1_) && std::isfinite(xi2_) && profile_->eval(0.0) == 0.0,
          ErrorCode::NonFiniteProfile, "profile must satisfy xi(0) = 0 with finite xi'(0)");
  opt_.eps = std::min(opt_.eps, grid_->r_min());
  for (double b : profile_->breakpoints())
    if (b > 0.0) breaks_s_.push_back(std::log(b));
  std::sort(breaks_s_.begin(), breaks_s_.end());

  nodes_.resize(grid_->size());
  if (grid_->has_origin()) nodes_[0] = {0.0, 1.0, 0.0};
  const std::size_t b = grid_->first();
  nodes_[b] = advance(origin_series(opt_.eps), opt_.eps, grid_->r(b));
  for (std::size_t i = b + 1; i < grid_->size(); ++i) {
    nodes_[i] = advance(nodes_[i - 1], grid_->r(i - 1), grid_->r(i));
    require(nodes_[i].h > 0.0 && std::isfinite(nodes_[i].h), ErrorCode::PositivityLost,
            "h underflows or is not finite at r = " + fmt(grid_->r(i)));
  }
}

ProfileIntegrals::Values ProfileIntegrals::origin_series(double r) const {
  const double I = xi1_ * r + 0.25 * xi2_ * r * r;
  const double F = r - 0.5 * xi1_ * r * r + (0.5 * xi1_ * xi1_ - 0.25 * xi2_) * r * r * r / 3.0;
  return {I, std::exp(-I), F};
}

ProfileIntegrals::Values ProfileIntegrals::advance(const Values& from, double r0,
                                                   double r1) const {
  if (r1 == r0) return from;
  const double s0 = std::log(r0), s1 = std::log(r1);
  std::vector<double> cuts{s0};
  for (double bs : breaks_s_)
    if (bs > s0 && bs < s1) cuts.push_back(bs);
  cuts.push_back(s1);

  const auto& x = quad::GaussLegendre10::nodes();
  const auto& w = quad::GaussLegendre10::weights();
  auto xi_s = [&](double s) {
    const double v = profile_->eval(std::exp(s));
    require(std::isfinite(v), ErrorCode::NonFiniteProfile, "xi is not finite");
    return v;
  };
  Values v = from;
  constexpr double kMaxPanel = 0.02;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double width = cuts[c + 1] - cuts[c];
    const int panels = std::max(1, static_cast<int>(std::ceil(width / kMaxPanel)));
    const double pw = width / panels;
    for (int p = 0; p < panels; ++p) {
      const double a = cuts[c] + pw * p;
      const double bnd = p + 1 == panels ? cuts[c + 1] : a + pw;
      const double half = 0.5 * (bnd - a);
      const double mid = 0.5 * (bnd + a);
      double dF = 0.0;
      for (std::size_t q = 0; q < x.size(); ++q) {
        const double sq = mid + half * x[q];
        const double Iq = v.I + quad::gauss_legendre(xi_s, a, sq);
        dF += w[q] * std::exp(-Iq + sq);
      }
      v.F += dF * half;
      v.I += quad::gauss_legendre(xi_s, a, bnd);
    }
  }
  v.h = std::exp(-v.I);
  return v;
}

ProfileIntegrals::Values ProfileIntegrals::at(double r) const {
  require(r >= 0.0, ErrorCode::OutOfDomain, "negative radius");
  if (r <= opt_.eps) return origin_series(r);
  const std::size_t b = grid_->first();
  if (r < grid_->r(b)) return advance(origin_series(opt_.eps), opt_.eps, r);
  std::size_t i = grid_->locate(r);
  if (i < b) i = b;
  if (r >= grid_->r_max()) i = grid_->size() - 1;
  return advance(nodes_[i], grid_->r(i), r);
}

HF build_h_f(const ProfilePtr& profile, const GridPtr& grid, const QuadOptions& opt) {
  ProfileIntegrals pi(profile, grid, opt);
  HF out;
  out.h.resize(grid->size());
  out.f.resize(grid->size());
  out.I.resize(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const auto& v = pi.node(i);
    out.I[i] = v.I;
    out.h[i] = v.h;
    out.f[i] = grid->r(i) > 0.0 ? v.F / grid->r(i) : 1.0;
  }
  return out;
}

}  // namespace kahlerlab
