#pragma once

namespace fas {

/// Diffusion noise schedule sigma_t on [0, T].
///
/// Constant:  sigma_t = sigma.
/// Geometric: sigma_t = beta * e^{alpha t} with
///   beta  = beta_min * (beta_max/beta_min)^T * sqrt(2 ln(beta_max/beta_min)),
///   alpha = -ln(beta_max/beta_min),
/// which decreases monotonically to sigma_T = beta_min * sqrt(2 ln(beta_max/beta_min)).
struct NoiseSchedule {
  enum class Kind { Constant, Geometric };

  Kind kind = Kind::Constant;
  double horizon = 1.0;  // T
  double sigma = 1.0;    // Constant only
  double beta_min = 0.0, beta_max = 0.0;  // Geometric only

  static NoiseSchedule constant(double sigma, double T);
  static NoiseSchedule geometric(double beta_min, double beta_max, double T);

  double sigma_at(double t) const;
  /// sigma_infty: the terminal/limiting value (sigma for Constant, sigma_T for Geometric).
  double sigma_terminal() const;

  // geometric reparameterization sigma_t = beta() * e^{alpha() t}
  double beta() const;
  double alpha() const;
};

}  // namespace fas
