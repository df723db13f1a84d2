#include "fas/pathinit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fas {

ReferencePath idpp_init(const Eigen::VectorXd& A, const Eigen::VectorXd& B,
                        const Grid& grid, int n_steps, double step_size,
                        int dim_per_atom) {
  if (n_steps < 0) throw std::invalid_argument("idpp_init: n_steps must be >= 0");
  ReferencePath ref = reference_path(A, B, grid);
  if (A.size() / dim_per_atom < 2 || n_steps == 0) return ref;

  double best = idpp_energy(ref.x0, A, B, dim_per_atom);
  Eigen::MatrixXd best_interior = ref.x0.interior;
  for (int it = 0; it < n_steps; ++it) {
    ref.x0.interior -= step_size * idpp_gradient(ref.x0, A, B, dim_per_atom);
    double e = idpp_energy(ref.x0, A, B, dim_per_atom);
    if (e <= best) {
      best = e;
      best_interior = ref.x0.interior;
    }
  }
  ref.x0.interior = best_interior;
  return ref;
}

RefineResult gradient_flow_refine(const PathSample& path, const EnergyModel& energy,
                                  double epsilon, int n) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_flow_refine: epsilon must be > 0");
  if (n < 0) throw std::invalid_argument("gradient_flow_refine: n must be >= 0");
  RefineResult res;
  res.path = path;
  double e = energy.energy(res.path);
  res.energy_trace.push_back(e);
  PathSample best = res.path;
  double best_e = e;
  int rising = 0;
  for (int it = 0; it < n; ++it) {
    res.path.interior -= epsilon * energy.gradient(res.path);
    e = energy.energy(res.path);
    res.energy_trace.push_back(e);
    if (e < best_e) {
      best_e = e;
      best = res.path;
    }
    rising = (e > res.energy_trace[res.energy_trace.size() - 2]) ? rising + 1 : 0;
    if (rising >= 5) {
      res.diverged = true;
      break;
    }
  }
  res.path = best;
  return res;
}

ReferencePath resample_reference(const ReferencePath& ref, const Grid& fine) {
  const Grid& coarse = ref.x0.grid;
  if (std::abs(coarse.length - fine.length) > 1e-12)
    throw std::invalid_argument("resample_reference: domain lengths differ");
  const int Kc = coarse.n_interior;
  const Eigen::Index d = ref.x0.channels();
  Eigen::MatrixXd full = ref.x0.with_endpoints();  // (Kc + 2) x d
  ReferencePath out;
  out.x0.grid = fine;
  out.x0.endpoint_a = ref.x0.endpoint_a;
  out.x0.endpoint_b = ref.x0.endpoint_b;
  out.x0.interior.resize(fine.n_interior, d);
  for (int i = 0; i < fine.n_interior; ++i) {
    // position of the fine grid point in units of coarse segments
    double s = fine.point(i) * (Kc + 1) / coarse.length;
    int j = std::min(static_cast<int>(s), Kc);
    double frac = s - j;
    out.x0.interior.row(i) = (1.0 - frac) * full.row(j) + frac * full.row(j + 1);
  }
  return out;
}

}  // namespace fas
