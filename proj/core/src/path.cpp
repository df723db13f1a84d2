#include "fas/path.hpp"

#include <stdexcept>

namespace fas {

Eigen::MatrixXd PathSample::with_endpoints() const {
  Eigen::MatrixXd full(interior.rows() + 2, interior.cols());
  full.row(0) = endpoint_a.transpose();
  full.middleRows(1, interior.rows()) = interior;
  full.row(full.rows() - 1) = endpoint_b.transpose();
  return full;
}

ReferencePath reference_path(const Eigen::VectorXd& A, const Eigen::VectorXd& B,
                             const Grid& grid) {
  if (A.size() != B.size())
    throw std::invalid_argument("reference_path: endpoint dimension mismatch");
  if (!A.allFinite() || !B.allFinite())
    throw std::invalid_argument("reference_path: non-finite endpoint");
  ReferencePath ref;
  ref.x0.grid = grid;
  ref.x0.endpoint_a = A;
  ref.x0.endpoint_b = B;
  ref.x0.interior.resize(grid.n_interior, A.size());
  for (int i = 0; i < grid.n_interior; ++i) {
    double c1 = grid.point(i) / grid.length;
    ref.x0.interior.row(i) = ((1.0 - c1) * A + c1 * B).transpose();
  }
  return ref;
}

PathSample lift(const Eigen::Ref<const Eigen::MatrixXd>& R, const ReferencePath& x0) {
  if (R.rows() != x0.x0.interior.rows() || R.cols() != x0.x0.interior.cols())
    throw std::invalid_argument("lift: residual shape does not match reference");
  PathSample out = x0.x0;
  out.interior += R;
  return out;
}

}  // namespace fas
