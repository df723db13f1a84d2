#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fas/energy.hpp"
#include "fas/path.hpp"

namespace fas {
namespace metrics {

/// Transition-hit probability: percentage of endpoints within eps of B.
double thp(const std::vector<Eigen::VectorXd>& endpoints, const Eigen::VectorXd& B,
           double eps);

/// Energy of the transition state: max of V over the full path, endpoints
/// included.
double ets(const PathSample& path, const Potential& pot);

struct LlkResult {
  double total = 0.0;
  double per_transition = 0.0;
  int n_transitions = 0;
};

/// Log-likelihood of the path under the discrete Langevin transition chain:
/// -U_synthetic plus the full Gaussian normalization of each kernel, reported
/// as a total and per transition.
LlkResult llk(const PathSample& path, const PhysParams& phys, const Potential& pot);

struct KabschResult {
  double rmsd = 0.0;
  bool degenerate = false;  // collinear input; rotation not unique
};

/// RMSD after optimal rigid alignment (centroid shift + SVD rotation with
/// determinant correction).
KabschResult kabsch_rmsd(const Eigen::Ref<const Eigen::MatrixXd>& P,
                         const Eigen::Ref<const Eigen::MatrixXd>& Q);

}  // namespace metrics
}  // namespace fas
