#include "fas/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace fas {

Grid::Grid(int K, double L) : n_interior(K), length(L) {
  if (K < 1) throw std::invalid_argument("Grid: K must be >= 1");
  if (!(L > 0.0)) throw std::invalid_argument("Grid: length must be > 0");
}

Eigen::VectorXd Grid::points() const {
  Eigen::VectorXd p(n_interior);
  for (int i = 0; i < n_interior; ++i) p[i] = point(i);
  return p;
}

EigenSystem EigenSystem::build(int K, double L, double kappa, double s) {
  if (K < 1) throw std::invalid_argument("EigenSystem: K must be >= 1");
  if (!(L > 0.0)) throw std::invalid_argument("EigenSystem: L must be > 0");
  if (!(kappa > 0.0)) throw std::invalid_argument("EigenSystem: kappa must be > 0");
  if (!(s > 0.5)) {
    // s <= d/2 with d = 1 breaks the trace-class condition on Q
    throw std::invalid_argument("EigenSystem: s must be > 0.5");
  }
  EigenSystem sys;
  sys.s = s;
  sys.kappa = kappa;
  sys.length = L;
  sys.lambdas.resize(K);
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < K; ++k) {
    double w = pi * (k + 1) / L;
    sys.lambdas[k] = kappa * kappa * w * w;
  }
  return sys;
}

Eigen::VectorXd EigenSystem::q_weights() const {
  return lambdas.array().pow(-s);
}

SineBasis::SineBasis(int K) : K_(K) {
  if (K < 1) throw std::invalid_argument("SineBasis: K must be >= 1");
  E_.resize(K, K);
  const double pi = 3.14159265358979323846;
  const double w = std::sqrt(2.0 / (K + 1));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i)
      E_(k, i) = w * std::sin(pi * (k + 1) * (i + 1) / (K + 1));
}

Eigen::MatrixXd SineBasis::dst(const Eigen::Ref<const Eigen::MatrixXd>& grid_values) const {
  if (grid_values.rows() != K_)
    throw std::invalid_argument("dst: input has wrong number of interior values");
  return E_ * grid_values;
}

Eigen::MatrixXd SineBasis::idst(const Eigen::Ref<const Eigen::MatrixXd>& coeffs) const {
  if (coeffs.rows() != K_)
    throw std::invalid_argument("idst: input has wrong number of modes");
  // E is symmetric orthogonal; its transpose equals itself
  return E_ * coeffs;
}

Eigen::MatrixXd scale_modes(const Eigen::Ref<const Eigen::MatrixXd>& coeffs,
                            const Eigen::Ref<const Eigen::VectorXd>& factors) {
  if (factors.size() != coeffs.rows())
    throw std::invalid_argument("scale_modes: factors length must equal mode count");
  if (!factors.allFinite())
    throw std::invalid_argument("scale_modes: non-finite factor");
  return factors.asDiagonal() * coeffs;
}

}  // namespace fas
