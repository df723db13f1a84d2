#include "fas/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace fas {

NoiseSchedule NoiseSchedule::constant(double sigma, double T) {
  if (!(sigma > 0.0)) throw std::invalid_argument("NoiseSchedule: sigma must be > 0");
  if (!(T > 0.0)) throw std::invalid_argument("NoiseSchedule: horizon must be > 0");
  NoiseSchedule s;
  s.kind = Kind::Constant;
  s.sigma = sigma;
  s.horizon = T;
  return s;
}

NoiseSchedule NoiseSchedule::geometric(double beta_min, double beta_max, double T) {
  if (!(beta_min > 0.0) || !(beta_max > beta_min))
    throw std::invalid_argument("NoiseSchedule: need 0 < beta_min < beta_max");
  if (!(T > 0.0)) throw std::invalid_argument("NoiseSchedule: horizon must be > 0");
  NoiseSchedule s;
  s.kind = Kind::Geometric;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.horizon = T;
  return s;
}

double NoiseSchedule::beta() const {
  double r = beta_max / beta_min;
  return beta_min * std::pow(r, horizon) * std::sqrt(2.0 * std::log(r));
}

double NoiseSchedule::alpha() const { return -std::log(beta_max / beta_min); }

double NoiseSchedule::sigma_at(double t) const {
  if (t < 0.0 || t > horizon)
    throw std::invalid_argument("NoiseSchedule: t outside [0, T]");
  if (kind == Kind::Constant) return sigma;
  return beta() * std::exp(alpha() * t);
}

double NoiseSchedule::sigma_terminal() const {
  if (kind == Kind::Constant) return sigma;
  return beta_min * std::sqrt(2.0 * std::log(beta_max / beta_min));
}

}  // namespace fas
