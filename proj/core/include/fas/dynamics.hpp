#pragma once

#include <cstdint>
#include <vector>

#include "fas/control.hpp"
#include "fas/path.hpp"
#include "fas/schedule.hpp"
#include "fas/spectral.hpp"

namespace fas {

struct SimOptions {
  int n_steps = 100;
  int batch = 1;
  std::uint64_t seed = 0;
  bool record_trajectory = false;
  /// Exact linear part e^{-lambda dt} instead of explicit Euler; useful for
  /// stiff kappa.
  bool exponential_euler = false;
  /// 0 = read FAS_THREADS (default 1).
  int n_threads = 0;
};

struct SimResult {
  std::vector<PathSample> samples;          // batch lifted terminal paths
  Eigen::MatrixXd terminal_modes;           // residual coefficients, K x (B*d)
  Eigen::VectorXd control_cost;             // per-sample 1/2 int ||Q^{1/2} alpha||^2 dt
  // populated only when record_trajectory is set: lifted grid values per
  // recorded step (including t=0 and t=T), packed K x (B*d)
  std::vector<Eigen::MatrixXd> trajectory;
  std::vector<double> times;
};

/// Number of rollout workers: explicit request, else FAS_THREADS, else 1.
int worker_count(int requested);

/// Controlled Euler-Maruyama rollout of the residual SDE in sine-mode
/// coordinates (per mode k):
///   R_{t+dt} = R_t + [-lambda_k R_t + sigma_t^2 lambda_k^{-s}
///              e^{-(T-t) lambda_k} u~_k] dt + sigma_t lambda_k^{-s/2}
///              sqrt(dt) eps,
/// with u~ = dst(u^theta(lift(R, x0), t)). Noise streams are keyed by
/// (seed, sample, step, mode), so results are independent of batch layout
/// and thread count.
SimResult simulate(const ControlParams& control, const NoiseSchedule& sched,
                   const EigenSystem& eig, const ReferencePath& x0,
                   const SimOptions& opts);

}  // namespace fas
