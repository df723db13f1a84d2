#pragma once

#include <Eigen/Dense>

#include "fas/rng.hpp"
#include "fas/schedule.hpp"
#include "fas/spectral.hpp"

namespace fas::measures {

/// Marginal variance q_t^(k) of mode k (0-based index) of the uncontrolled
/// residual OU process, q_t^(k) = int_0^t sigma_s^2 e^{-2(t-s)lambda} lambda^{-s} ds.
double mode_variance(const NoiseSchedule& sched, const EigenSystem& eig,
                     int mode, double t);

/// All modes at once.
Eigen::VectorXd mode_variances(const NoiseSchedule& sched, const EigenSystem& eig, double t);

/// Invariant variance q_inf^(k) = 1/2 sigma_inf^2 lambda_k^{-(1+s)}.
double invariant_variance(const NoiseSchedule& sched, const EigenSystem& eig, int mode);

Eigen::VectorXd invariant_variances(const NoiseSchedule& sched, const EigenSystem& eig);

/// log dnu_T/dnu_inf evaluated on residual mode coefficients R_T (K x d):
/// sum over modes/channels of the 1-D centered Gaussian log-density ratio
/// log N(r; 0, q_T) - log N(r; 0, q_inf).
double log_rnd(const Eigen::Ref<const Eigen::MatrixXd>& R_T,
               const NoiseSchedule& sched, const EigenSystem& eig, double T);

/// d/dr of log_rnd, per mode/channel: -r (1/q_T - 1/q_inf).
Eigen::MatrixXd grad_log_rnd(const Eigen::Ref<const Eigen::MatrixXd>& R_T,
                             const NoiseSchedule& sched, const EigenSystem& eig,
                             double T);

/// Conditional (bridge) draw R_t | R_T, mode-independent Gaussians with
///   m = (q_t/q_T) e^{-(T-t)lambda} R_T,
///   v = q_t - q_t^2 e^{-2(T-t)lambda} / q_T   (clamped at 0 from below).
Eigen::MatrixXd sample_bridge(const Eigen::Ref<const Eigen::MatrixXd>& R_T,
                              double t, const NoiseSchedule& sched,
                              const EigenSystem& eig, double T, rng::Stream& rs);

/// Unconditional marginal draw R_t^(k) ~ N(0, q_t^(k)), d channels.
Eigen::MatrixXd sample_marginal(double t, const NoiseSchedule& sched,
                                const EigenSystem& eig, int channels,
                                rng::Stream& rs);

}  // namespace fas::measures
