#include "rnarl/replay_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "rnarl/errors.hpp"

namespace rnarl {

namespace {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

SumTree::SumTree(std::size_t leaves)
    : leaves_(leaves),
      base_(next_pow2(std::max<std::size_t>(leaves, 1))),
      sum_(2 * base_, 0.0),
      max_(2 * base_, 0.0) {}

void SumTree::set(std::size_t leaf, double value) {
  std::size_t i = base_ + leaf;
  sum_[i] = value;
  max_[i] = value;
  for (i /= 2; i >= 1; i /= 2) {
    sum_[i] = sum_[2 * i] + sum_[2 * i + 1];
    max_[i] = std::max(max_[2 * i], max_[2 * i + 1]);
  }
}

std::size_t SumTree::find(double mass) const {
  std::size_t i = 1;
  while (i < base_) {
    const std::size_t left = 2 * i;
    if (mass < sum_[left] || sum_[left + 1] <= 0.0) {
      i = left;
    } else {
      mass -= sum_[left];
      i = left + 1;
    }
  }
  return i - base_;
}

PrioritizedBuffer::PrioritizedBuffer(PerConfig config)
    : config_(config), tree_(config.capacity), raw_(config.capacity) {
  if (config_.capacity == 0) throw ConfigError("capacity", "must be >= 1");
  if (config_.alpha < 0.0 || config_.alpha > 1.0) {
    throw ConfigError("alpha_per", "must lie in [0, 1]");
  }
  if (!(config_.epsilon > 0.0)) throw ConfigError("epsilon_per", "must be > 0");
  entries_.reserve(std::min<std::size_t>(config_.capacity, 1 << 16));
  priorities_.assign(config_.capacity, 0.0);
}

void PrioritizedBuffer::set_priority(std::size_t index, double p) {
  priorities_[index] = p;
  tree_.set(index, std::pow(p, config_.alpha));
  raw_.set(index, p);
}

void PrioritizedBuffer::push(Transition t) {
  const double p = size_ == 0 ? 1.0 : raw_.max();
  if (entries_.size() < config_.capacity) {
    entries_.push_back(std::move(t));
  } else {
    entries_[next_] = std::move(t);
  }
  set_priority(next_, p);
  next_ = (next_ + 1) % config_.capacity;
  size_ = std::min(size_ + 1, config_.capacity);
}

SampleBatch PrioritizedBuffer::sample(std::size_t batch_size, double beta,
                                      Rng& rng) const {
  if (size_ == 0) throw EmptyBuffer();
  SampleBatch batch;
  batch.transitions.reserve(batch_size);
  batch.indices.reserve(batch_size);
  batch.weights.reserve(batch_size);
  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch_size);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double max_weight = 0.0;
  for (std::size_t k = 0; k < batch_size; ++k) {
    double mass = segment * (static_cast<double>(k) + unit(rng));
    mass = std::min(mass, std::nextafter(total, 0.0));
    std::size_t idx = tree_.find(mass);
    if (idx >= size_) idx = size_ - 1;
    const double prob = tree_.get(idx) / total;
    const double w = std::pow(static_cast<double>(size_) * prob, -beta);
    max_weight = std::max(max_weight, w);
    batch.indices.push_back(idx);
    batch.weights.push_back(w);
    batch.transitions.push_back(entries_[idx]);
  }
  for (double& w : batch.weights) w /= max_weight;
  return batch;
}

void PrioritizedBuffer::update_priorities(const std::vector<std::size_t>& indices,
                                          const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size()) {
    throw ShapeMismatch("indices and td_errors differ in length");
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size_) {
      throw OutOfRange("replay index " + std::to_string(indices[k]) +
                       " out of range (size " + std::to_string(size_) + ")");
    }
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    set_priority(indices[k], std::abs(td_errors[k]) + config_.epsilon);
  }
}

}  // namespace rnarl
