#include "kahlerlab/grid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "kahlerlab/error.hpp"

namespace kahlerlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Weights w[p][k] with int_p^{p+1} L(x) dx = sum_k w[p][k] v[k] for the
// Lagrange interpolant through integer abscissae 0..m-1.
std::vector<std::vector<double>> interval_weights(int m) {
  std::vector<std::vector<double>> table(static_cast<std::size_t>(m - 1));
  Eigen::MatrixXd vander(m, m);
  for (int q = 0; q < m; ++q)
    for (int k = 0; k < m; ++k) vander(q, k) = std::pow(static_cast<double>(k), q);
  const auto lu = vander.fullPivLu();
  for (int p = 0; p + 1 < m; ++p) {
    Eigen::VectorXd moments(m);
    for (int q = 0; q < m; ++q)
      moments(q) = (std::pow(p + 1.0, q + 1) - std::pow(static_cast<double>(p), q + 1)) / (q + 1);
    Eigen::VectorXd w = lu.solve(moments);
    table[static_cast<std::size_t>(p)].assign(w.data(), w.data() + m);
  }
  return table;
}

const std::vector<std::vector<double>>& weights_for(int m) {
  static const std::array<std::vector<std::vector<double>>, 7> cache = [] {
    std::array<std::vector<std::vector<double>>, 7> c;
    for (int k = 2; k <= 6; ++k) c[static_cast<std::size_t>(k)] = interval_weights(k);
    return c;
  }();
  return cache[static_cast<std::size_t>(m)];
}

}  // namespace

std::shared_ptr<const RadialGrid> RadialGrid::log_uniform(double r_min, double r_max,
                                                          std::size_t nodes) {
  require(r_min > 0.0 && r_max > r_min, ErrorCode::InvalidArgument,
          "log grid needs 0 < r_min < r_max");
  require(nodes >= 8, ErrorCode::InvalidArgument, "log grid needs at least 8 nodes");
  std::shared_ptr<RadialGrid> g(new RadialGrid());
  g->kind_ = GridKind::Log;
  g->u0_ = std::log(r_min);
  g->du_ = (std::log(r_max) - g->u0_) / static_cast<double>(nodes - 1);
  g->r_.push_back(0.0);
  g->u_.push_back(-std::numeric_limits<double>::infinity());
  g->drdu_.push_back(0.0);
  for (std::size_t j = 0; j < nodes; ++j) {
    const double u = g->u0_ + g->du_ * static_cast<double>(j);
    g->u_.push_back(u);
    g->r_.push_back(j + 1 == nodes ? r_max : std::exp(u));
    g->drdu_.push_back(g->r_.back());
  }
  g->r_[1] = r_min;
  return g;
}

std::shared_ptr<const RadialGrid> RadialGrid::sinh_cell_centered(double rho0,
                                                                 double r_max,
                                                                 std::size_t nodes) {
  require(rho0 > 0.0 && r_max > 0.0, ErrorCode::InvalidArgument,
          "sinh grid needs rho0 > 0 and r_max > 0");
  require(nodes >= 8, ErrorCode::InvalidArgument, "sinh grid needs at least 8 nodes");
  std::shared_ptr<RadialGrid> g(new RadialGrid());
  g->kind_ = GridKind::Sinh;
  g->rho0_ = rho0;
  const double sigma_max = std::asinh(std::sqrt(r_max) / rho0);
  // Last cell centre sits exactly at r_max.
  g->du_ = sigma_max / (static_cast<double>(nodes) - 0.5);
  g->u0_ = 0.5 * g->du_;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double u = g->u0_ + g->du_ * static_cast<double>(j);
    g->u_.push_back(u);
    g->r_.push_back(g->r_of_u(u));
    g->drdu_.push_back(g->drdu_of_u(u));
  }
  return g;
}

double RadialGrid::u_of_r(double r) const {
  if (kind_ == GridKind::Log) return std::log(r);
  return std::asinh(std::sqrt(r) / rho0_);
}

double RadialGrid::r_of_u(double u) const {
  if (kind_ == GridKind::Log) return std::exp(u);
  const double rho = rho0_ * std::sinh(u);
  return rho * rho;
}

double RadialGrid::drdu_of_u(double u) const {
  if (kind_ == GridKind::Log) return std::exp(u);
  return rho0_ * rho0_ * std::sinh(2.0 * u);
}

std::size_t RadialGrid::locate(double r) const {
  const std::size_t last = size() - 2;
  if (r <= r_[first()]) return has_origin() && r < r_[1] ? 0 : first();
  const double pos = (u_of_r(r) - u0_) / du_;
  auto idx = static_cast<std::ptrdiff_t>(std::floor(pos)) + static_cast<std::ptrdiff_t>(first());
  idx = std::clamp<std::ptrdiff_t>(idx, static_cast<std::ptrdiff_t>(first()),
                                   static_cast<std::ptrdiff_t>(last));
  auto i = static_cast<std::size_t>(idx);
  // Guard against rounding at node boundaries.
  while (i > first() && r_[i] > r) --i;
  while (i < last && r_[i + 1] <= r) ++i;
  return i;
}

std::vector<double> RadialGrid::derivative_u(std::span<const double> v,
                                             InnerClosure closure) const {
  require(v.size() == size(), ErrorCode::GridMismatch, "derivative_u: size mismatch");
  const std::size_t b = first();
  const std::size_t n = size() - b;
  const double h = du_;
  std::vector<double> out(size(), kNaN);
  auto at = [&](std::ptrdiff_t j) -> double {
    if (j >= 0) return v[b + static_cast<std::size_t>(j)];
    const double mirror = v[b + static_cast<std::size_t>(-j - 1)];
    return closure == InnerClosure::Odd ? -mirror : mirror;
  };
  const bool ghosts = kind_ == GridKind::Sinh && closure != InnerClosure::OneSided;
  for (std::size_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::ptrdiff_t>(jj);
    double d;
    if (jj + 2 < n && (jj >= 2 || ghosts)) {
      d = (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * h);
    } else if (jj == 0) {
      d = (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
    } else if (jj == 1) {
      d = (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h);
    } else if (jj + 1 == n) {
      d = (25.0 * at(j) - 48.0 * at(j - 1) + 36.0 * at(j - 2) - 16.0 * at(j - 3) + 3.0 * at(j - 4)) /
          (12.0 * h);
    } else {
      d = (3.0 * at(j + 1) + 10.0 * at(j) - 18.0 * at(j - 1) + 6.0 * at(j - 2) - at(j - 3)) /
          (12.0 * h);
    }
    out[b + jj] = d;
  }
  return out;
}

std::vector<double> RadialGrid::second_derivative_u(std::span<const double> v,
                                                    InnerClosure closure) const {
  require(v.size() == size(), ErrorCode::GridMismatch, "second_derivative_u: size mismatch");
  const std::size_t b = first();
  const std::size_t n = size() - b;
  const double h2 = du_ * du_;
  std::vector<double> out(size(), kNaN);
  auto at = [&](std::ptrdiff_t j) -> double {
    if (j >= 0) return v[b + static_cast<std::size_t>(j)];
    const double mirror = v[b + static_cast<std::size_t>(-j - 1)];
    return closure == InnerClosure::Odd ? -mirror : mirror;
  };
  const bool ghosts = kind_ == GridKind::Sinh && closure != InnerClosure::OneSided;
  for (std::size_t jj = 0; jj < n; ++jj) {
    const auto j = static_cast<std::ptrdiff_t>(jj);
    double d;
    if (jj + 2 < n && (jj >= 2 || ghosts)) {
      d = (-at(j - 2) + 16.0 * at(j - 1) - 30.0 * at(j) + 16.0 * at(j + 1) - at(j + 2)) / (12.0 * h2);
    } else if (jj == 0) {
      d = (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) + 61.0 * at(4) - 10.0 * at(5)) /
          (12.0 * h2);
    } else if (jj == 1) {
      d = (10.0 * at(0) - 15.0 * at(1) - 4.0 * at(2) + 14.0 * at(3) - 6.0 * at(4) + at(5)) / (12.0 * h2);
    } else if (jj + 1 == n) {
      d = (45.0 * at(j) - 154.0 * at(j - 1) + 214.0 * at(j - 2) - 156.0 * at(j - 3) +
           61.0 * at(j - 4) - 10.0 * at(j - 5)) /
          (12.0 * h2);
    } else {
      d = (10.0 * at(j + 1) - 15.0 * at(j) - 4.0 * at(j - 1) + 14.0 * at(j - 2) - 6.0 * at(j - 3) +
           at(j - 4)) /
          (12.0 * h2);
    }
    out[b + jj] = d;
  }
  return out;
}

std::vector<double> RadialGrid::derivative_r(std::span<const double> v,
                                             InnerClosure closure) const {
  auto d = derivative_u(v, closure);
  for (std::size_t i = first(); i < size(); ++i) d[i] /= drdu_[i];
  return d;
}

std::vector<double> RadialGrid::cumulative(std::span<const double> g, double origin_power,
                                           std::optional<double> q_origin) const {
  require(g.size() == size(), ErrorCode::GridMismatch, "cumulative: size mismatch");
  const std::size_t b = first();
  const std::size_t n = size() - b;
  std::vector<double> out(size(), 0.0);

  const double r1 = r_[b];
  const double r2 = r_[b + 1];
  const double q1 = g[b] / std::pow(r1, origin_power);
  double q0;
  if (q_origin) {
    q0 = *q_origin;
  } else if (has_origin() && origin_power == 0.0 && std::isfinite(g[0])) {
    q0 = g[0];
  } else {
    const double q2 = g[b + 1] / std::pow(r2, origin_power);
    q0 = q1 - (q2 - q1) * r1 / (r2 - r1);
  }
  const double p1 = origin_power + 1.0;
  out[b] = q0 * std::pow(r1, p1) / p1 + (q1 - q0) * std::pow(r1, p1) / (p1 + 1.0);

  std::vector<double> integrand(n);
  for (std::size_t j = 0; j < n; ++j) integrand[j] = g[b + j] * drdu_[b + j];

  const int m = static_cast<int>(std::min<std::size_t>(n, 6));
  const auto& w = weights_for(m);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const std::size_t start = std::min(j >= 2 ? j - 2 : 0, n - static_cast<std::size_t>(m));
    const std::size_t p = j - start;
    double piece = 0.0;
    for (int k = 0; k < m; ++k) piece += w[p][static_cast<std::size_t>(k)] * integrand[start + static_cast<std::size_t>(k)];
    out[b + j + 1] = out[b + j] + piece * du_;
  }
  return out;
}

double RadialGrid::interpolate(std::span<const double> v, double r) const {
  require(v.size() == size(), ErrorCode::GridMismatch, "interpolate: size mismatch");
  const std::size_t b = first();
  const std::size_t n = size() - b;
  if (r <= r_[b]) {
    if (has_origin()) return v[0] + (v[1] - v[0]) * (r / r_[1]);
    return v[0];
  }
  if (r >= r_.back()) return v.back();
  const std::size_t i = locate(r);
  const std::size_t j = i - b;
  const double t = (u_of_r(r) - u_[i]) / du_;

  auto secant = [&](std::size_t k) { return (v[b + k + 1] - v[b + k]) / du_; };
  auto slope = [&](std::size_t k) -> double {
    if (k == 0) {
      const double d0 = secant(0), d1 = n > 2 ? secant(1) : d0;
      double d = 1.5 * d0 - 0.5 * d1;
      if (d * d0 <= 0.0) d = 0.0;
      else if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) d = 3.0 * d0;
      return d;
    }
    if (k + 1 == n) {
      const double d0 = secant(k - 1), dm = k >= 2 ? secant(k - 2) : d0;
      double d = 1.5 * d0 - 0.5 * dm;
      if (d * d0 <= 0.0) d = 0.0;
      else if (d0 * dm <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) d = 3.0 * d0;
      return d;
    }
    const double a = secant(k - 1), c = secant(k);
    if (a * c <= 0.0) return 0.0;
    return 2.0 / (1.0 / a + 1.0 / c);
  };
  const double y0 = v[i], y1 = v[i + 1];
  const double m0 = slope(j) * du_, m1 = slope(j + 1) * du_;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 +
         (t3 - t2) * m1;
}

bool RadialGrid::same_as(const RadialGrid& other) const {
  return kind_ == other.kind_ && size() == other.size() && u0_ == other.u0_ &&
         du_ == other.du_ && rho0_ == other.rho0_;
}

}  // namespace kahlerlab
