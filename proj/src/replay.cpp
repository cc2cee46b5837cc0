#include <algorithm>

#include "ssac/common.hpp"
#include "ssac/learner.hpp"

namespace ssac::learner {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim,
                           std::size_t hazard_count)
    : capacity_(capacity), obs_dim_(obs_dim), hazard_count_(hazard_count) {
  require(capacity_ >= 1, "replay: capacity must be >= 1");
  require(obs_dim_ >= 1, "replay: obs_dim must be >= 1");
  obs_.resize(capacity_ * obs_dim_);
  next_obs_.resize(capacity_ * obs_dim_);
  act_.resize(capacity_ * env::kActionDim);
  cost_.resize(capacity_ * hazard_count_);
  phi_.resize(capacity_ * hazard_count_);
  reward_.resize(capacity_);
  done_.resize(capacity_);
}

void ReplayBuffer::push(const Transition& t) {
  require(t.obs.size() == obs_dim_ && t.next_obs.size() == obs_dim_,
          "replay: observation dimension mismatch");
  require(t.cost.size() == hazard_count_ && t.phi.size() == hazard_count_,
          "replay: hazard dimension mismatch");
  const std::size_t i = cursor_;
  std::copy(t.obs.begin(), t.obs.end(), obs_.begin() + i * obs_dim_);
  std::copy(t.next_obs.begin(), t.next_obs.end(), next_obs_.begin() + i * obs_dim_);
  std::copy(t.action.begin(), t.action.end(), act_.begin() + i * env::kActionDim);
  std::copy(t.cost.begin(), t.cost.end(), cost_.begin() + i * hazard_count_);
  std::copy(t.phi.begin(), t.phi.end(), phi_.begin() + i * hazard_count_);
  reward_[i] = t.reward;
  done_[i] = t.done ? 1 : 0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

TransitionView ReplayBuffer::view(std::size_t i) const {
  require(i < size_, "replay: index out of range");
  return TransitionView{
      {obs_.data() + i * obs_dim_, obs_dim_},
      {act_.data() + i * env::kActionDim, env::kActionDim},
      {cost_.data() + i * hazard_count_, hazard_count_},
      {phi_.data() + i * hazard_count_, hazard_count_},
      {next_obs_.data() + i * obs_dim_, obs_dim_},
      reward_[i],
      done_[i] != 0,
  };
}

void ReplayBuffer::sample_indices(std::size_t n, Rng& rng,
                                  std::vector<std::uint32_t>& out) const {
  require(size_ >= 1, "replay: cannot sample from an empty buffer");
  out.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = static_cast<std::uint32_t>(rng.uniform_int(0, size_ - 1));
  }
}

}  // namespace ssac::learner
