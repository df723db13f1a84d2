#pragma once

#include <vector>

#include "fas/energy.hpp"
#include "fas/path.hpp"

namespace fas {

/// IDPP-refined initial path: starts from the linear interpolation between A
/// and B and runs fixed-step gradient descent on the IDPP mismatch with
/// endpoints frozen. For single-point images (fewer than two atoms) the
/// objective is identically zero and the linear interpolation is returned
/// unchanged.
ReferencePath idpp_init(const Eigen::VectorXd& A, const Eigen::VectorXd& B,
                        const Grid& grid, int n_steps = 200,
                        double step_size = 1e-3, int dim_per_atom = 3);

struct RefineResult {
  PathSample path;
  std::vector<double> energy_trace;
  bool diverged = false;  // energy rose 5 consecutive steps; best iterate returned
};

/// Gradient flow x <- x - eps * dU/dx on the interior, n iterations, endpoints
/// frozen. Returns the best (lowest-energy) iterate seen.
RefineResult gradient_flow_refine(const PathSample& path, const EnergyModel& energy,
                                  double epsilon, int n);

/// Evaluate a reference path on another grid by piecewise-linear interpolation
/// of the full path (endpoints included). The underlying function of u is
/// unchanged, so a control trained against the coarse reference sees the same
/// lifting at any refinement level.
ReferencePath resample_reference(const ReferencePath& ref, const Grid& fine);

}  // namespace fas
