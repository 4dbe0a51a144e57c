#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "onramp/mlp.hpp"

namespace onramp {

/// A sampled minibatch, one column per transition.
struct Batch {
  Matrix s;       // obs_dim x N, normalized
  Matrix a;       // 1 x N, normalized action
  Vector r;       // N
  Matrix s_next;  // obs_dim x N
  Vector done;    // N, termination indicator in {0, 1}
  int size() const { return static_cast<int>(r.size()); }
};

/// Fixed-capacity ring of transitions stored as flat rows
/// [s (obs_dim), a, r, s_next (obs_dim), done]. Storage grows on demand up
/// to capacity, after which the oldest row is overwritten.
class ReplayBuffer {
 public:
  ReplayBuffer(std::int64_t capacity, int obs_dim) : capacity_(capacity), obs_dim_(obs_dim) {
    if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }

  int stride() const { return 2 * obs_dim_ + 3; }
  int obs_dim() const { return obs_dim_; }
  std::int64_t capacity() const { return capacity_; }
  std::int64_t size() const { return size_; }
  std::int64_t head() const { return head_; }

  void push(std::span<const double> s, double a, double r, std::span<const double> s_next, bool done) {
    if (static_cast<int>(s.size()) != obs_dim_ || static_cast<int>(s_next.size()) != obs_dim_) {
      throw std::invalid_argument("ReplayBuffer::push: observation dimension mismatch");
    }
    const std::int64_t row = head_;
    if (size_ < capacity_ && static_cast<std::int64_t>(data_.size()) < (row + 1) * stride()) {
      data_.resize(static_cast<std::size_t>((row + 1) * stride()));
    }
    double* p = data_.data() + row * stride();
    std::copy(s.begin(), s.end(), p);
    p[obs_dim_] = a;
    p[obs_dim_ + 1] = r;
    std::copy(s_next.begin(), s_next.end(), p + obs_dim_ + 2);
    p[2 * obs_dim_ + 2] = done ? 1.0 : 0.0;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  /// Uniform sampling with replacement over the stored rows.
  std::vector<std::int64_t> sample_indices(int n, std::mt19937_64& rng) const {
    if (size_ == 0) throw std::logic_error("ReplayBuffer::sample on an empty buffer");
    std::uniform_int_distribution<std::int64_t> pick(0, size_ - 1);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = pick(rng);
    return idx;
  }

  void gather(std::span<const std::int64_t> idx, Batch& b) const {
    const int n = static_cast<int>(idx.size());
    b.s.resize(obs_dim_, n);
    b.a.resize(1, n);
    b.r.resize(n);
    b.s_next.resize(obs_dim_, n);
    b.done.resize(n);
    for (int j = 0; j < n; ++j) {
      const double* p = row(idx[static_cast<std::size_t>(j)]);
      for (int k = 0; k < obs_dim_; ++k) b.s(k, j) = p[k];
      b.a(0, j) = p[obs_dim_];
      b.r(j) = p[obs_dim_ + 1];
      for (int k = 0; k < obs_dim_; ++k) b.s_next(k, j) = p[obs_dim_ + 2 + k];
      b.done(j) = p[2 * obs_dim_ + 2];
    }
  }

  Batch sample(int n, std::mt19937_64& rng) const {
    Batch b;
    const auto idx = sample_indices(n, rng);
    gather(idx, b);
    return b;
  }

  const double* row(std::int64_t i) const { return data_.data() + i * stride(); }

  /// Raw storage for checkpointing.
  const std::vector<double>& storage() const { return data_; }
  void restore(std::vector<double> data, std::int64_t size, std::int64_t head) {
    if (size < 0 || size > capacity_ || head < 0 || head >= capacity_ ||
        static_cast<std::int64_t>(data.size()) != size * stride()) {
      throw std::invalid_argument("ReplayBuffer::restore: inconsistent layout");
    }
    data_ = std::move(data);
    size_ = size;
    head_ = head;
  }

 private:
  std::int64_t capacity_;
  int obs_dim_;
  std::vector<double> data_;
  std::int64_t size_ = 0;
  std::int64_t head_ = 0;
};

}  // namespace onramp
