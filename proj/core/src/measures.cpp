#include "fas/measures.hpp"

#include <cmath>
#include <stdexcept>

namespace fas::measures {

namespace {
void check_mode(const EigenSystem& eig, int mode) {
  if (mode < 0 || mode >= eig.n_modes())
    throw std::invalid_argument("mode index out of range");
}
}  // namespace

double mode_variance(const NoiseSchedule& sched, const EigenSystem& eig,
                     int mode, double t) {
  check_mode(eig, mode);
  if (t < 0.0 || t > sched.horizon)
    throw std::invalid_argument("mode_variance: t outside [0, T]");
  const double lam = eig.lambdas[mode];
  const double qw = std::pow(lam, -eig.s);
  if (sched.kind == NoiseSchedule::Kind::Constant) {
    double sig2 = sched.sigma * sched.sigma;
    return sig2 * qw * (-std::expm1(-2.0 * t * lam)) / (2.0 * lam);
  }
  const double b = sched.beta();
  const double a = sched.alpha();
  // (e^{2at} - e^{-2lt}) / (2(a+l)) = t e^{-2lt} expm1(x)/x with x = 2(a+l)t,
  // stable through the degenerate point a + l = 0 (limit t e^{2at})
  const double x = 2.0 * (a + lam) * t;
  double ratio;
  if (std::abs(x) < 1e-10) {
    ratio = 1.0 + 0.5 * x;
  } else {
    ratio = std::expm1(x) / x;
  }
  return b * b * qw * t * std::exp(-2.0 * lam * t) * ratio;
}

Eigen::VectorXd mode_variances(const NoiseSchedule& sched, const EigenSystem& eig, double t) {
  Eigen::VectorXd q(eig.n_modes());
  for (int k = 0; k < eig.n_modes(); ++k) q[k] = mode_variance(sched, eig, k, t);
  return q;
}

double invariant_variance(const NoiseSchedule& sched, const EigenSystem& eig, int mode) {
  check_mode(eig, mode);
  double si = sched.sigma_terminal();
  return 0.5 * si * si * std::pow(eig.lambdas[mode], -(1.0 + eig.s));
}

Eigen::VectorXd invariant_variances(const NoiseSchedule& sched, const EigenSystem& eig) {
  Eigen::VectorXd q(eig.n_modes());
  for (int k = 0; k < eig.n_modes(); ++k) q[k] = invariant_variance(sched, eig, k);
  return q;
}

double log_rnd(const Eigen::Ref<const Eigen::MatrixXd>& R_T,
               const NoiseSchedule& sched, const EigenSystem& eig, double T) {
  if (R_T.rows() != eig.n_modes())
    throw std::invalid_argument("log_rnd: coefficient rows must match mode count");
  double acc = 0.0;
  for (int k = 0; k < eig.n_modes(); ++k) {
    double qT = mode_variance(sched, eig, k, T);
    if (!(qT > 0.0)) throw std::invalid_argument("log_rnd: q_T = 0 (called at T = 0?)");
    double qi = invariant_variance(sched, eig, k);
    double log_det = std::log(qT / qi);
    double prec = 1.0 / qT - 1.0 / qi;
    for (int c = 0; c < R_T.cols(); ++c) {
      double r = R_T(k, c);
      acc += -0.5 * (log_det + r * r * prec);
    }
  }
  return acc;
}

Eigen::MatrixXd grad_log_rnd(const Eigen::Ref<const Eigen::MatrixXd>& R_T,
                             const NoiseSchedule& sched, const EigenSystem& eig,
                             double T) {
  if (R_T.rows() != eig.n_modes())
    throw std::invalid_argument("grad_log_rnd: coefficient rows must match mode count");
  Eigen::MatrixXd g(R_T.rows(), R_T.cols());
  for (int k = 0; k < eig.n_modes(); ++k) {
    double qT = mode_variance(sched, eig, k, T);
    if (!(qT > 0.0)) throw std::invalid_argument("grad_log_rnd: q_T = 0");
    double qi = invariant_variance(sched, eig, k);
    double prec = 1.0 / qT - 1.0 / qi;
    g.row(k) = -prec * R_T.row(k);
  }
  return g;
}

Eigen::MatrixXd sample_bridge(const Eigen::Ref<const Eigen::MatrixXd>& R_T,
                              double t, const NoiseSchedule& sched,
                              const EigenSystem& eig, double T, rng::Stream& rs) {
  if (t < 0.0 || t > T) throw std::invalid_argument("sample_bridge: t outside [0, T]");
  if (R_T.rows() != eig.n_modes())
    throw std::invalid_argument("sample_bridge: coefficient rows must match mode count");
  Eigen::MatrixXd out(R_T.rows(), R_T.cols());
  for (int k = 0; k < eig.n_modes(); ++k) {
    double lam = eig.lambdas[k];
    double qt = mode_variance(sched, eig, k, t);
    double qT = mode_variance(sched, eig, k, T);
    double decay = std::exp(-(T - t) * lam);
    double m_scale, v;
    if (t >= T) {
      m_scale = 1.0;
      v = 0.0;
    } else if (qt == 0.0) {
      m_scale = 0.0;
      v = 0.0;
    } else {
      m_scale = qt / qT * decay;
      v = qt - qt * qt * decay * decay / qT;
      if (v < 0.0) v = 0.0;  // roundoff guard
    }
    double sd = std::sqrt(v);
    for (int c = 0; c < R_T.cols(); ++c)
      out(k, c) = m_scale * R_T(k, c) + sd * rs.normal();
  }
  return out;
}

Eigen::MatrixXd sample_marginal(double t, const NoiseSchedule& sched,
                                const EigenSystem& eig, int channels,
                                rng::Stream& rs) {
  if (t < 0.0) throw std::invalid_argument("sample_marginal: t must be >= 0");
  Eigen::MatrixXd out(eig.n_modes(), channels);
  for (int k = 0; k < eig.n_modes(); ++k) {
    double sd = std::sqrt(mode_variance(sched, eig, k, t));
    for (int c = 0; c < channels; ++c) out(k, c) = sd * rs.normal();
  }
  return out;
}

}  // namespace fas::measures
