#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "dtvr/error.hpp"

namespace dtvr {

/// Complete binary tree over `capacity` leaves combining children with `Op`.
/// Leaves past the capacity hold `identity`.
template <typename T, typename Op>
class SegmentTree {
 public:
  SegmentTree(std::size_t capacity, T identity, Op op = Op{})
      : capacity_(capacity), identity_(identity), op_(op) {
    require(capacity > 0, Errc::InvalidArgument, "segment tree capacity must be positive");
    leaves_ = 1;
    while (leaves_ < capacity) leaves_ <<= 1;
    nodes_.assign(2 * leaves_, identity_);
  }

  std::size_t capacity() const { return capacity_; }

  void set(std::size_t i, T value) {
    require(i < capacity_, Errc::InvalidArgument, "segment tree index out of range");
    std::size_t n = i + leaves_;
    nodes_[n] = value;
    for (n >>= 1; n >= 1; n >>= 1) nodes_[n] = op_(nodes_[2 * n], nodes_[2 * n + 1]);
  }

  T get(std::size_t i) const { return nodes_[i + leaves_]; }
  T root() const { return nodes_[1]; }

  void clear() { std::fill(nodes_.begin(), nodes_.end(), identity_); }

 protected:
  std::size_t capacity_;
  std::size_t leaves_ = 1;
  T identity_;
  Op op_;
  std::vector<T> nodes_;
};

struct MaxOp {
  double operator()(double a, double b) const { return std::max(a, b); }
};

using MaxTree = SegmentTree<double, MaxOp>;

// Sum tree with prefix-sum search, the core of proportional sampling.
class SumTree : public SegmentTree<double, std::plus<double>> {
 public:
  explicit SumTree(std::size_t capacity) : SegmentTree(capacity, 0.0) {}

  double total() const { return root(); }

  /// Leaf whose cumulative range contains `mass`; never returns a zero-mass
  /// leaf while the total is positive.
  std::size_t find(double mass) const {
    std::size_t n = 1;
    while (n < leaves_) {
      const double left = nodes_[2 * n];
      const double right = nodes_[2 * n + 1];
      if ((mass < left && left > 0.0) || right <= 0.0) {
        n = 2 * n;
      } else {
        mass -= left;
        n = 2 * n + 1;
      }
    }
    return std::min(n - leaves_, capacity_ - 1);
  }
};

}  // namespace dtvr
