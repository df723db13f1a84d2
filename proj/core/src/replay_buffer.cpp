#include "fas/replay_buffer.hpp"

#include <stdexcept>

namespace fas {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  entries_.reserve(capacity);
}

void ReplayBuffer::push(Eigen::MatrixXd x_T, Eigen::MatrixXd y_T) {
  if (x_T.rows() != y_T.rows() || x_T.cols() != y_T.cols())
    throw std::invalid_argument("ReplayBuffer: pair shape mismatch");
  if (entries_.size() < capacity_) {
    entries_.push_back({std::move(x_T), std::move(y_T)});
  } else {
    entries_[head_] = {std::move(x_T), std::move(y_T)};
    head_ = (head_ + 1) % capacity_;
  }
}

const ReplayBuffer::Entry& ReplayBuffer::sample(rng::Stream& rs) const {
  if (entries_.empty()) throw std::runtime_error("ReplayBuffer: sample from empty buffer");
  std::size_t i = static_cast<std::size_t>(rs.uniform() * entries_.size());
  if (i >= entries_.size()) i = entries_.size() - 1;
  return entries_[i];
}

}  // namespace fas
