#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fas/control.hpp"
#include "fas/dynamics.hpp"
#include "fas/energy.hpp"
#include "fas/path.hpp"
#include "fas/replay_buffer.hpp"

namespace fas {

struct TrainConfig {
  int epochs = 1000;            // M
  int grad_steps = 100;         // L, per epoch
  int rollouts = 512;           // N, per epoch
  int buffer_capacity = 10000;  // |B|
  double lr = 1e-4;
  double alpha_max = 100.0;
  int n_sde_steps = 100;
  int batch_size = 256;
  std::uint64_t seed = 0;
  double lambda_reg = 0.0;
  LossWeighting weighting = LossWeighting::Unweighted;
  ClipMode clip_mode = ClipMode::Global;
  bool exponential_euler = false;
  int n_threads = 0;            // 0 = FAS_THREADS / 1
  int checkpoint_interval = 0;  // 0 = only final; in epochs

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;      // mean matching loss over the epoch's gradient steps
  double ets_mean = 0.0;  // NaN when no potential is supplied
  double ets_std = 0.0;
  std::int64_t wall_ms = 0;
  std::int64_t dropped = 0;  // rollouts rejected by the adjoint gate this epoch
  std::size_t buffer_fill = 0;
};

struct TrainResult {
  ControlParams params;
  std::vector<EpochLog> log;
  std::int64_t total_dropped = 0;
};

/// Called after each epoch; epoch-indexed checkpointing hooks in here.
using EpochCallback = std::function<void(const EpochLog&, const ControlParams&)>;

/// The full FAS loop: per epoch, roll out N paths under the frozen current
/// control, push clipped terminal adjoints into the replay buffer, then take
/// L gradient steps on the matching loss with bridge-resampled X_t.
/// `pot` (optional) is only used for the ETS diagnostic on fresh rollouts.
/// `reg` (optional) adds lambda_reg * reg to the terminal cost gradient.
/// Aborts after 3 consecutive epochs of non-finite loss.
TrainResult train(const TrainConfig& cfg, const NoiseSchedule& sched,
                  const EigenSystem& eig, const ControlArch& arch,
                  const EnergyModel& energy, const ReferencePath& x0,
                  const Potential* pot = nullptr, const EnergyModel* reg = nullptr,
                  const EpochCallback& on_epoch = nullptr);

struct SocCost {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};

/// Monte-Carlo estimate of E[ int 1/2 ||Q^{1/2} alpha||^2 dt + g(X_T) ] with
/// g = U + log RND; equals KL(P^alpha || P*) up to the constant log Z.
SocCost soc_cost(const ControlParams& control, const NoiseSchedule& sched,
                 const EigenSystem& eig, const EnergyModel& energy,
                 const ReferencePath& x0, int n_samples, int n_steps,
                 std::uint64_t seed, double lambda_reg = 0.0,
                 const EnergyModel* reg = nullptr);

}  // namespace fas
