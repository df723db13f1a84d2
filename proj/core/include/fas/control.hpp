#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fas/schedule.hpp"
#include "fas/spectral.hpp"

namespace fas {

/// Shape of the control field u^theta: a flat stack of spectral mixing blocks
/// with feature-wise time modulation.
struct ControlArch {
  int channels = 2;    // d, output channels (matches the path's value dim)
  int n_layers = 2;    // number of spectral blocks
  int n_modes = 8;     // spectral mixing width M (M <= K at evaluation time)
  int width = 32;      // channel width c
  int embed_dim = 128; // sinusoidal time-embedding size (even)

  bool operator==(const ControlArch&) const = default;
};

struct ControlParams {
  Eigen::VectorXd theta;
  ControlArch arch;
  std::uint32_t version = 1;  // checkpoint schema tag
};

enum class LossWeighting { Unweighted, CtWeighted };

/// The trainable control field.
///
/// forward contract: (1) pointwise channel lift of the interior values plus
/// sinusoidal grid features; (2) n_layers blocks of [spectral mixing on the
/// lowest n_modes sine modes + pointwise affine path], modulated by a
/// feature-wise scale-shift computed from a sinusoidal embedding of t, with a
/// tanh nonlinearity and residual connection; (3) pointwise projection to d
/// channels (zero-initialized, so a fresh net outputs exactly 0).
class ControlNet {
 public:
  static int param_count(const ControlArch& arch);

  /// Fan-in scaled init; output layer zeroed so u^theta == 0 at start.
  static ControlParams init(const ControlArch& arch, std::uint64_t seed);

  /// Batched forward. X packs a batch of B interior paths side by side as a
  /// K x (B*d) matrix; t is per-sample. Returns u as K x (B*d).
  static Eigen::MatrixXd forward(const ControlParams& params,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 int batch, const Grid& grid,
                                 const std::vector<double>& t);

  /// Single-sample convenience overload.
  static Eigen::MatrixXd forward(const ControlParams& params,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 const Grid& grid, double t);

  struct LossResult {
    double loss = 0.0;
    Eigen::VectorXd grad;
  };

  /// Matching loss over a minibatch of (X_t, t, Y_T) and its exact
  /// reverse-mode gradient w.r.t. theta.
  ///
  /// Unweighted: mean_b 1/2 ||u(X_b, t_b) + Y_b||^2 with the du-weighted grid
  /// inner product. CtWeighted: the residual is transformed to modes and row
  /// k scaled by sigma_t lambda_k^{-s/2} e^{-(T-t) lambda_k} before squaring.
  static LossResult loss_and_grad(const ControlParams& params,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  const Eigen::Ref<const Eigen::MatrixXd>& Y,
                                  int batch, const Grid& grid,
                                  const std::vector<double>& t,
                                  LossWeighting weighting,
                                  const NoiseSchedule& sched,
                                  const EigenSystem& eig);
};

}  // namespace fas
