#pragma once

#include <Eigen/Dense>

namespace fas {

/// Uniform interior grid on [0, L]: u_i = i*L/(K+1), i = 1..K.
/// The boundary points u = 0 and u = L are not part of the grid; they carry
/// the pinned endpoint values.
struct Grid {
  int n_interior = 0;
  double length = 1.0;

  Grid() = default;
  Grid(int K, double L = 1.0);

  double point(int i) const { return (i + 1) * length / (n_interior + 1); }
  double du() const { return length / (n_interior + 1); }
  Eigen::VectorXd points() const;
};

/// Dirichlet Laplacian spectrum lambda_k = kappa^2 (pi k / L)^2, k = 1..K,
/// with covariance decay exponent s (Q-weights lambda_k^{-s}).
struct EigenSystem {
  Eigen::VectorXd lambdas;
  double s = 1.0;
  double kappa = 1.0;
  double length = 1.0;

  static EigenSystem build(int K, double L, double kappa, double s);

  int n_modes() const { return static_cast<int>(lambdas.size()); }
  /// lambda_k^{-s}, the diagonal of Q.
  Eigen::VectorXd q_weights() const;
};

/// Orthonormal DST-I on the interior grid: E(k,i) = sqrt(2/(K+1)) *
/// sin(pi (k+1)(i+1)/(K+1)). E is symmetric and orthogonal, so dst and idst
/// are exact inverses of each other.
class SineBasis {
 public:
  explicit SineBasis(int K);

  int size() const { return K_; }
  const Eigen::MatrixXd& matrix() const { return E_; }

  /// Grid values (K x d) -> mode coefficients (K x d).
  Eigen::MatrixXd dst(const Eigen::Ref<const Eigen::MatrixXd>& grid_values) const;
  /// Mode coefficients (K x d) -> grid values (K x d).
  Eigen::MatrixXd idst(const Eigen::Ref<const Eigen::MatrixXd>& coeffs) const;

 private:
  int K_;
  Eigen::MatrixXd E_;
};

/// Per-mode diagonal scaling: row k of coeffs multiplied by factors[k].
/// Realizes e^{-t lambda_k}, lambda_k^{-s/2}, and the C_t weight.
Eigen::MatrixXd scale_modes(const Eigen::Ref<const Eigen::MatrixXd>& coeffs,
                            const Eigen::Ref<const Eigen::VectorXd>& factors);

}  // namespace fas
