#pragma once

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kahlerlab/grid.hpp"

namespace kahlerlab {

/// Generating function xi on [0, inf) with xi(0) = 0.
class XiProfile {
 public:
  virtual ~XiProfile() = default;
  virtual double eval(double r) const = 0;
  virtual double eval_prime(double r) const = 0;
  /// Radius beyond which xi is constant (infinity when not declared).
  virtual double support_max() const { return std::numeric_limits<double>::infinity(); }
  /// Radii where xi loses smoothness; quadratures split there.
  virtual std::vector<double> breakpoints() const { return {}; }
  virtual bool tabulated() const { return false; }
  virtual std::string name() const = 0;
};

using ProfilePtr = std::shared_ptr<const XiProfile>;

/// Smooth monotone step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x).
double smooth_step(double x);
double smooth_step_prime(double x);
double smooth_step_second(double x);
/// Quintic C^2 step 6x^5 - 15x^4 + 10x^3 on [0, 1].
double quintic_step(double x);
double quintic_step_prime(double x);
double quintic_step_second(double x);

namespace profiles {

ProfilePtr flat();
/// scale * r / (1 + r). scale = 1 is the cigar-type profile.
ProfilePtr rational(double scale = 1.0);
/// a * S(r / r0): smooth, and exactly a for r >= r0.
ProfilePtr eventually_constant(double a, double r0 = 10.0);
/// level * (1 - (1 - r)^4) on [0, 1], level beyond.
ProfilePtr poly_cap(double level = 1.0);
/// S(r) * (alpha + (1 - alpha)(1 + sin log r) / 2).
ProfilePtr oscillator(double alpha);
/// S(r) * (1 + 1 / log(e + r)); tends to 1 like 1 + 1/log r.
ProfilePtr log_cap();
/// S(r) * (0.9 + 0.1 sin(sqrt r)); the envelope of xi'/h grows like r^0.4.
ProfilePtr unbounded_curvature();
/// amplitude * exp(1 - 1/(1 - x^2)) with x = (r - center)/width, zero outside.
ProfilePtr bump(double center, double width, double amplitude);
/// a * p + b * q.
ProfilePtr combination(ProfilePtr p, double a, ProfilePtr q, double b);
/// Cubic Hermite through (r, xi, xi') knots; r[0] must be 0 and xi[0] = 0.
/// Constant beyond the last knot.
ProfilePtr tabulated(std::vector<double> r, std::vector<double> xi,
                     std::vector<double> xi_prime);
/// Named family with numeric parameters (used by config files and the CLI).
ProfilePtr make(const std::string& family, const std::map<std::string, double>& params);

}  // namespace profiles

struct QuadOptions {
  double tol = 1e-10;
  /// End of the Taylor segment at the origin.
  double eps = 1e-6;
};

/// I(r) = int_0^r xi(t)/t dt.
double integrate_singular(const XiProfile& profile, double r, const QuadOptions& opt = {});

/// Second derivative of xi at 0 by a forward difference of xi'.
double xi_second_at_origin(const XiProfile& profile);

/// Exact evaluation of I, h = exp(-I) and F = int_0^r h for one profile,
/// anchored at the nodes of a grid and integrated with Gauss-Legendre panels
/// between them.
class ProfileIntegrals {
 public:
  ProfileIntegrals(ProfilePtr profile, GridPtr grid, const QuadOptions& opt = {});

  struct Values {
    double I;
    double h;
    double F;
  };
  Values at(double r) const;
  const Values& node(std::size_t i) const { return nodes_[i]; }
  const XiProfile& profile() const { return *profile_; }
  ProfilePtr profile_ptr() const { return profile_; }
  const GridPtr& grid() const { return grid_; }

 private:
  Values origin_series(double r) const;
  Values advance(const Values& from, double r0, double r1) const;

  ProfilePtr profile_;
  GridPtr grid_;
  QuadOptions opt_;
  double xi1_ = 0.0;  // xi'(0)
  double xi2_ = 0.0;  // xi''(0)
  std::vector<double> breaks_s_;
  std::vector<Values> nodes_;
};

struct HF {
  std::vector<double> h;
  std::vector<double> f;
  std::vector<double> I;
};

/// Samples h and f on every grid node (h(0) = f(0) = 1 at the origin node).
HF build_h_f(const ProfilePtr& profile, const GridPtr& grid, const QuadOptions& opt = {});

}  // namespace kahlerlab
