#include "fas/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fas {
namespace metrics {

double thp(const std::vector<Eigen::VectorXd>& endpoints, const Eigen::VectorXd& B,
           double eps) {
  if (endpoints.empty()) throw std::invalid_argument("thp: empty batch");
  if (!(eps > 0.0)) throw std::invalid_argument("thp: eps must be > 0");
  int hit = 0;
  for (const auto& x : endpoints)
    if ((x - B).norm() < eps) ++hit;
  return 100.0 * hit / static_cast<double>(endpoints.size());
}

double ets(const PathSample& path, const Potential& pot) {
  Eigen::MatrixXd X = path.with_endpoints();
  if (X.rows() == 0) throw std::invalid_argument("ets: empty path");
  double m = -std::numeric_limits<double>::infinity();
  for (int u = 0; u < X.rows(); ++u) {
    double v = pot.value(X.row(u).transpose());
    if (!std::isfinite(v)) throw std::runtime_error("ets: non-finite potential value");
    if (v > m) m = v;
  }
  return m;
}

LlkResult llk(const PathSample& path, const PhysParams& phys, const Potential& pot) {
  TpdSyntheticEnergy nll(pot, phys);
  double U = nll.energy(path);
  const int n_trans = static_cast<int>(path.interior.rows()) + 1;
  const int d = path.channels();
  double du = phys.spacing(path.grid);
  // each transition kernel is N(mean, 2 kBT du / gamma_m * I) in d dims
  double var = 2.0 * phys.kBT * du / phys.gamma_m;
  double log_norm = -0.5 * d * std::log(2.0 * M_PI * var);
  LlkResult r;
  r.n_transitions = n_trans;
  r.total = -U + n_trans * log_norm;
  r.per_transition = r.total / n_trans;
  return r;
}

KabschResult kabsch_rmsd(const Eigen::Ref<const Eigen::MatrixXd>& P,
                         const Eigen::Ref<const Eigen::MatrixXd>& Q) {
  if (P.rows() != Q.rows() || P.cols() != Q.cols())
    throw std::invalid_argument("kabsch_rmsd: shape mismatch");
  if (P.rows() < 3) throw std::invalid_argument("kabsch_rmsd: need at least 3 points");
  Eigen::MatrixXd Pc = P.rowwise() - P.colwise().mean();
  Eigen::MatrixXd Qc = Q.rowwise() - Q.colwise().mean();
  Eigen::MatrixXd H = Pc.transpose() * Qc;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd U = svd.matrixU(), V = svd.matrixV();
  Eigen::VectorXd S = svd.singularValues();
  double det = (V * U.transpose()).determinant();
  Eigen::VectorXd corr = Eigen::VectorXd::Ones(S.size());
  corr[S.size() - 1] = det < 0.0 ? -1.0 : 1.0;
  Eigen::MatrixXd R = V * corr.asDiagonal() * U.transpose();
  KabschResult res;
  res.rmsd = std::sqrt((Pc * R.transpose() - Qc).squaredNorm() / P.rows());
  // rank deficiency (e.g. collinear points) leaves the rotation non-unique
  if (S.size() >= 2 && S[S.size() - 2] <= 1e-12 * std::max(1.0, S[0]))
    res.degenerate = true;
  return res;
}

}  // namespace metrics
}  // namespace fas
