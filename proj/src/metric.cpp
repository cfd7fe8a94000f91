#include "kahlerlab/metric.hpp"

#include <algorithm>
#include <cmath>

#include "kahlerlab/error.hpp"

namespace kahlerlab {

namespace {

// Below this radius f' comes from the Taylor expansion of (1/r) int_0^r h.
constexpr double kSeriesRadius = 1e-5;

InnerClosure closure_for(const RadialGrid& grid) {
  return grid.kind() == GridKind::Sinh ? InnerClosure::Even : InnerClosure::OneSided;
}

void check_positive(const std::vector<double>& v, const RadialGrid& grid, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i]))
      fail(ErrorCode::PositivityLost, std::string(what) + " <= 0 or non-finite at r = " +
                                          std::to_string(grid.r(i)));
  }
}

}  // namespace

RadialMetric RadialMetric::from_profile(ProfilePtr profile, int n, GridPtr grid,
                                        const QuadOptions& opt) {
  require(n >= 1, ErrorCode::DimensionMismatch, "dimension must be >= 1");
  auto exact = std::make_shared<ProfileIntegrals>(profile, grid, opt);
  RadialMetric m;
  m.n_ = n;
  m.grid_ = grid;
  m.profile_ = std::move(profile);
  m.exact_ = exact;
  m.f_.resize(grid->size());
  m.h_.resize(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const auto& v = exact->node(i);
    m.h_[i] = v.h;
    m.f_[i] = grid->r(i) > 0.0 ? v.F / grid->r(i) : 1.0;
  }
  check_positive(m.f_, *grid, "f");
  check_positive(m.h_, *grid, "h");
  return m;
}

RadialMetric RadialMetric::from_samples(int n, GridPtr grid, std::vector<double> f,
                                        std::vector<double> h, ProfilePtr profile) {
  require(n >= 1, ErrorCode::DimensionMismatch, "dimension must be >= 1");
  require(f.size() == grid->size() && h.size() == grid->size(), ErrorCode::GridMismatch,
          "sample count does not match the grid");
  check_positive(f, *grid, "f");
  check_positive(h, *grid, "h");
  if (grid->has_origin())
    require(std::abs(f[0] - h[0]) <= 1e-10 * std::max(1.0, f[0]), ErrorCode::PositivityLost,
            "f(0) must equal h(0)");
  RadialMetric m;
  m.n_ = n;
  m.grid_ = std::move(grid);
  m.f_ = std::move(f);
  m.h_ = std::move(h);
  m.profile_ = std::move(profile);
  return m;
}

std::vector<double> RadialMetric::f_prime() const {
  std::vector<double> out(grid_->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = grid_->r(i);
    if (exact_ && r < kSeriesRadius) {
      out[i] = at(r).f_prime;
    } else if (r > 0.0) {
      out[i] = (h_[i] - f_[i]) / r;
    }
  }
  if (grid_->has_origin() && !exact_) out[0] = out[1];
  return out;
}

std::vector<double> RadialMetric::reconstructed_xi() const {
  std::vector<double> logh(h_.size());
  for (std::size_t i = 0; i < h_.size(); ++i) logh[i] = std::log(h_[i]);
  const auto d = grid_->derivative_u(logh, closure_for(*grid_));
  std::vector<double> out(h_.size(), 0.0);
  for (std::size_t i = grid_->first(); i < h_.size(); ++i)
    out[i] = -grid_->r(i) * d[i] / grid_->drdu(i);
  return out;
}

std::vector<double> RadialMetric::xi() const {
  if (!profile_) return reconstructed_xi();
  std::vector<double> out(grid_->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = profile_->eval(grid_->r(i));
  return out;
}

std::vector<double> RadialMetric::xi_prime() const {
  std::vector<double> out(grid_->size());
  if (profile_) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = profile_->eval_prime(grid_->r(i));
    return out;
  }
  const auto x = reconstructed_xi();
  out = grid_->derivative_r(x, closure_for(*grid_));
  if (grid_->has_origin()) out[0] = out[1];
  return out;
}

double RadialMetric::kahler_residual() const {
  std::vector<double> F(f_.size());
  for (std::size_t i = 0; i < F.size(); ++i) F[i] = grid_->r(i) * f_[i];
  const auto dF = grid_->derivative_r(F, closure_for(*grid_));
  double worst = 0.0;
  const std::size_t b = grid_->first();
  const std::size_t skip = grid_->kind() == GridKind::Sinh ? 0 : 2;
  for (std::size_t i = b + skip; i + 2 < F.size(); ++i)
    worst = std::max(worst, std::abs(dF[i] - h_[i]) / h_[i]);
  return worst;
}

RadialMetric::Point RadialMetric::at(double r) const {
  require(r >= 0.0, ErrorCode::OutOfDomain, "negative radius");
  require(r <= grid_->r_max() * (1.0 + 1e-12), ErrorCode::OutOfDomain,
          "radius beyond r_max of the grid");
  if (exact_) {
    const auto v = exact_->at(r);
    if (r < kSeriesRadius) {
      const double x1 = profile_->eval_prime(0.0);
      const double x2 = xi_second_at_origin(*profile_);
      const double c = 0.5 * x1 * x1 - 0.25 * x2;
      const double f = r > 0.0 ? v.F / r : 1.0;
      return {f, v.h, -0.5 * x1 + 2.0 * c * r / 3.0};
    }
    const double f = v.F / r;
    return {f, v.h, (v.h - f) / r};
  }
  const double f = grid_->interpolate(f_, r);
  const double h = grid_->interpolate(h_, r);
  if (r <= grid_->r_min()) {
    const auto fp = f_prime();
    return {f, h, fp[grid_->first()]};
  }
  return {f, h, (h - f) / r};
}

Eigen::MatrixXcd RadialMetric::matrix_at(std::span<const std::complex<double>> z) const {
  require(static_cast<int>(z.size()) == n_, ErrorCode::DimensionMismatch,
          "point dimension does not match the metric");
  double r = 0.0;
  for (const auto& zi : z) r += std::norm(zi);
  if (r > grid_->r_max() * (1.0 + 1e-12))
    fail(ErrorCode::OutOfDomain, "|z|^2 exceeds r_max");
  const Point p = at(r);
  Eigen::MatrixXcd g(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      g(i, j) = (i == j ? p.f : 0.0) + p.f_prime * std::conj(z[static_cast<std::size_t>(i)]) *
                                           z[static_cast<std::size_t>(j)];
  return g;
}

RelativeEigen det_trace_eigs(const RadialMetric& g, const RadialMetric& ghat, double r) {
  require(g.n() == ghat.n(), ErrorCode::DimensionMismatch, "metrics differ in dimension");
  require(g.grid()->same_as(*ghat.grid()), ErrorCode::GridMismatch, "metrics use different grids");
  const auto a = g.at(r);
  const auto b = ghat.at(r);
  RelativeEigen out;
  out.lambda_rad = a.h / b.h;
  out.lambda_tan = a.f / b.f;
  const int m = g.n() - 1;
  out.trace = out.lambda_rad + m * out.lambda_tan;
  out.det_ratio = out.lambda_rad * std::pow(out.lambda_tan, m);
  out.eigenvalues.push_back(out.lambda_rad);
  for (int i = 0; i < m; ++i) out.eigenvalues.push_back(out.lambda_tan);
  return out;
}

RelativeNodes relative_nodes(const RadialMetric& g, const RadialMetric& ghat) {
  require(g.n() == ghat.n(), ErrorCode::DimensionMismatch, "metrics differ in dimension");
  require(g.grid()->same_as(*ghat.grid()), ErrorCode::GridMismatch, "metrics use different grids");
  RelativeNodes out;
  const std::size_t N = g.grid()->size();
  out.lambda_rad.resize(N);
  out.lambda_tan.resize(N);
  out.min_lambda = std::numeric_limits<double>::infinity();
  out.max_lambda = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    out.lambda_rad[i] = g.h()[i] / ghat.h()[i];
    out.lambda_tan[i] = g.f()[i] / ghat.f()[i];
    out.min_lambda = std::min(out.min_lambda, out.lambda_rad[i]);
    out.max_lambda = std::max(out.max_lambda, out.lambda_rad[i]);
    if (g.n() > 1) {
      out.min_lambda = std::min(out.min_lambda, out.lambda_tan[i]);
      out.max_lambda = std::max(out.max_lambda, out.lambda_tan[i]);
    }
  }
  return out;
}

RadialMetric metric_from_potential(const RadialMetric& base, const RadialPotential& u) {
  const auto& grid = base.grid();
  std::vector<double> f(grid->size()), h(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double r = grid->r(i);
    const double up = u.u_prime(r);
    const double upp = u.u_second(r);
    require(std::isfinite(up) && std::isfinite(upp), ErrorCode::NonFiniteProfile,
            "potential derivatives are not finite");
    f[i] = base.f()[i] + up;
    h[i] = base.h()[i] + up + r * upp;
  }
  return RadialMetric::from_samples(base.n(), grid, std::move(f), std::move(h));
}

}  // namespace kahlerlab
