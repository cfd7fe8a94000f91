#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace kahlerlab {

enum class GridKind {
  /// Uniform in s = log r on [r_min, r_max], with an extra node at r = 0.
  Log,
  /// Cell-centred in sigma with |z| = rho0 * sinh(sigma); no origin node.
  /// Even functions of |z| extend by reflection through sigma = 0.
  Sinh,
};

/// Behaviour of a sampled field across the inner end of the grid, used to
/// close finite-difference stencils.
enum class InnerClosure { OneSided, Even, Odd };

/// Radial grid in r = |z|^2. Every grid is uniform in a "native" coordinate u
/// (s = log r for Log, sigma for Sinh); derivatives and cumulative integrals
/// are taken in u and mapped back with dr/du.
class RadialGrid {
 public:
  static std::shared_ptr<const RadialGrid> log_uniform(double r_min, double r_max,
                                                       std::size_t nodes);
  static std::shared_ptr<const RadialGrid> sinh_cell_centered(double rho0,
                                                              double r_max,
                                                              std::size_t nodes);

  GridKind kind() const { return kind_; }
  std::size_t size() const { return r_.size(); }
  bool has_origin() const { return kind_ == GridKind::Log; }
  /// Index of the first node with r > 0.
  std::size_t first() const { return has_origin() ? 1 : 0; }
  double r(std::size_t i) const { return r_[i]; }
  double u(std::size_t i) const { return u_[i]; }
  double drdu(std::size_t i) const { return drdu_[i]; }
  double du() const { return du_; }
  double r_min() const { return r_[first()]; }
  double r_max() const { return r_.back(); }
  std::span<const double> radii() const { return r_; }
  double rho0() const { return rho0_; }

  double u_of_r(double r) const;
  double r_of_u(double u) const;
  double drdu_of_u(double u) const;

  /// Largest i with r(i) <= r (clamped to [0, size-2]).
  std::size_t locate(double r) const;

  /// 4th-order derivative with respect to u at every node with r > 0.
  /// Entries at the origin node (Log grids) are left as NaN.
  std::vector<double> derivative_u(std::span<const double> values,
                                   InnerClosure closure) const;
  /// 4th-order second derivative with respect to u.
  std::vector<double> second_derivative_u(std::span<const double> values,
                                          InnerClosure closure) const;
  /// d/dr via the chain rule applied to derivative_u.
  std::vector<double> derivative_r(std::span<const double> values,
                                   InnerClosure closure) const;

  /// Running integral G_i = int_0^{r_i} g(t) dt of a sampled integrand.
  /// Near the origin g(t) is modelled as t^origin_power * q(t) with q linear
  /// on [0, r_first]; q(0) comes from `q_origin` or is extrapolated.
  /// Between nodes the integrand is integrated in u with a 6th-order rule.
  std::vector<double> cumulative(std::span<const double> integrand,
                                 double origin_power,
                                 std::optional<double> q_origin = std::nullopt) const;

  /// Monotone (Fritsch-Carlson) cubic interpolation in u. Below the first
  /// positive radius, interpolates linearly towards the origin value (Log)
  /// or holds the first value (Sinh).
  double interpolate(std::span<const double> values, double r) const;

  bool same_as(const RadialGrid& other) const;

 private:
  RadialGrid() = default;

  GridKind kind_ = GridKind::Log;
  double u0_ = 0.0;
  double du_ = 0.0;
  double rho0_ = 0.0;
  std::vector<double> r_;
  std::vector<double> u_;
  std::vector<double> drdu_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

}  // namespace kahlerlab
