#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kahlerlab/grid.hpp"
#include "kahlerlab/profiles.hpp"

namespace kahlerlab {

/// U(n)-invariant metric g = f(r) delta + f'(r) zbar_i z_j sampled on a radial grid.
class RadialMetric {
 public:
  static RadialMetric from_profile(ProfilePtr profile, int n, GridPtr grid,
                                   const QuadOptions& opt = {});
  /// Metric from raw samples. f and h must be positive; the Kahler relation
  /// h = (r f)' is not enforced here (see kahler_residual).
  static RadialMetric from_samples(int n, GridPtr grid, std::vector<double> f,
                                   std::vector<double> h, ProfilePtr profile = nullptr);

  int n() const { return n_; }
  const GridPtr& grid() const { return grid_; }
  const std::vector<double>& f() const { return f_; }
  const std::vector<double>& h() const { return h_; }
  /// Generating profile when the metric was built from one.
  const ProfilePtr& profile() const { return profile_; }

  /// f' = (h - f)/r, with the Taylor limit at the origin.
  std::vector<double> f_prime() const;
  /// xi on the nodes: from the profile if present, else -r h'/h.
  std::vector<double> xi() const;
  /// xi' on the nodes: from the profile if present, else differentiated.
  std::vector<double> xi_prime() const;
  /// -r h'/h by 4th-order differencing of log h.
  std::vector<double> reconstructed_xi() const;
  /// max over interior nodes of |(r f)' - h| / h.
  double kahler_residual() const;

  struct Point {
    double f;
    double h;
    double f_prime;
  };
  /// f, h, f' at an arbitrary radius: exact quadrature for profile-backed
  /// metrics, monotone cubic interpolation otherwise.
  Point at(double r) const;

  /// Dense Hermitian matrix g_{i jbar} at z in C^n.
  Eigen::MatrixXcd matrix_at(std::span<const std::complex<double>> z) const;

 private:
  int n_ = 1;
  GridPtr grid_;
  std::vector<double> f_;
  std::vector<double> h_;
  ProfilePtr profile_;
  std::shared_ptr<const ProfileIntegrals> exact_;
};

struct RelativeEigen {
  double lambda_rad = 1.0;  // h / hhat, multiplicity 1
  double lambda_tan = 1.0;  // f / fhat, multiplicity n - 1
  double trace = 0.0;       // tr_ghat g
  double det_ratio = 1.0;
  std::vector<double> eigenvalues;
};

/// Eigenvalues of g relative to ghat at radius r, with trace and determinant ratio.
RelativeEigen det_trace_eigs(const RadialMetric& g, const RadialMetric& ghat, double r);

/// Same quantities at every node (no interpolation).
struct RelativeNodes {
  std::vector<double> lambda_rad;
  std::vector<double> lambda_tan;
  double min_lambda = 0.0;
  double max_lambda = 0.0;
};
RelativeNodes relative_nodes(const RadialMetric& g, const RadialMetric& ghat);

/// Radial potential with its first two derivatives in r.
struct RadialPotential {
  std::function<double(double)> u;
  std::function<double(double)> u_prime;
  std::function<double(double)> u_second;
};

/// g + i dd-bar u for radial u: f += u', h += (r u')'.
RadialMetric metric_from_potential(const RadialMetric& base, const RadialPotential& u);

}  // namespace kahlerlab
