#pragma once

#include <Eigen/Dense>

#include "fas/spectral.hpp"

namespace fas {

/// A discretized path with pinned Dirichlet endpoints. The interior holds the
/// K grid values (K x d); endpoint_a/endpoint_b are fixed by construction and
/// never integrated.
struct PathSample {
  Eigen::MatrixXd interior;    // K x d
  Eigen::VectorXd endpoint_a;  // d
  Eigen::VectorXd endpoint_b;  // d
  Grid grid;

  int channels() const { return static_cast<int>(interior.cols()); }
  /// Full path including endpoints, (K+2) x d, in grid order.
  Eigen::MatrixXd with_endpoints() const;
};

/// The fixed boundary-satisfying reference x0 used for lifting. The default
/// is the linear interpolation x0[u] = (1 - u/L) A + (u/L) B; any endpoint-
/// respecting path (e.g. an IDPP-refined one) can be stored here instead.
struct ReferencePath {
  PathSample x0;
};

ReferencePath reference_path(const Eigen::VectorXd& A, const Eigen::VectorXd& B,
                             const Grid& grid);

/// X = x0 + R on the interior; endpoints copied from x0.
PathSample lift(const Eigen::Ref<const Eigen::MatrixXd>& R, const ReferencePath& x0);

}  // namespace fas
