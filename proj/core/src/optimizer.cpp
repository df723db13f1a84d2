#include "fas/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace fas {

AdamOptimizer::AdamOptimizer(int n_params, double lr, double beta1,
                             double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (n_params < 1) throw std::invalid_argument("AdamOptimizer: empty parameter vector");
  if (!(lr > 0.0)) throw std::invalid_argument("AdamOptimizer: lr must be > 0");
  m_ = Eigen::VectorXd::Zero(n_params);
  v_ = Eigen::VectorXd::Zero(n_params);
}

bool AdamOptimizer::step(Eigen::VectorXd& params,
                         const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("AdamOptimizer: shape mismatch");
  if (!grad.allFinite()) {
    ++skipped_;
    return false;
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
  double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  return true;
}

}  // namespace fas
