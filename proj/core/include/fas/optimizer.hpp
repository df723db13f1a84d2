#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace fas {

/// Adam with bias correction. Non-finite gradients are rejected: the step is
/// skipped and counted instead of poisoning the moments.
class AdamOptimizer {
 public:
  AdamOptimizer(int n_params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  /// Updates params in place. Returns false (and increments skipped_steps)
  /// if grad has a non-finite entry.
  bool step(Eigen::VectorXd& params, const Eigen::Ref<const Eigen::VectorXd>& grad);

  std::int64_t steps_taken() const { return t_; }
  std::int64_t skipped_steps() const { return skipped_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::int64_t skipped_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace fas
