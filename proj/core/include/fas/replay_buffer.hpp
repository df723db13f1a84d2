#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "fas/rng.hpp"

namespace fas {

/// FIFO ring of (terminal grid values, clipped adjoint) pairs holding the
/// most recent `capacity` entries; minibatches are drawn uniformly with
/// replacement.
class ReplayBuffer {
 public:
  struct Entry {
    Eigen::MatrixXd x_T;  // K x d grid values
    Eigen::MatrixXd y_T;  // K x d clipped adjoint
  };

  explicit ReplayBuffer(std::size_t capacity);

  void push(Eigen::MatrixXd x_T, Eigen::MatrixXd y_T);
  const Entry& sample(rng::Stream& rs) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  /// Entry by age-independent slot index (testing aid).
  const Entry& at(std::size_t i) const { return entries_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Entry> entries_;
};

}  // namespace fas
