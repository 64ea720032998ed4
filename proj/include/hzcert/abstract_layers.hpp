#pragma once

#include <vector>

#include "hzcert/zonotope.hpp"

namespace hzcert {

// Index sets, one per batch example (all of equal size).
using IndexSets = std::vector<std::vector<std::size_t>>;

enum class CorrelationKind { All, Fixed, Max, MaxPool };

struct CorrelationStrategy {
  CorrelationKind kind = CorrelationKind::All;
  std::size_t k = 0;  // Fixed / Max
  // MaxPool kernel (channels, height, width) and stride.
  std::size_t pc = 0, ph = 0, pw = 0, stride = 1;

  static CorrelationStrategy all() { return {CorrelationKind::All, 0, 0, 0, 0, 1}; }
  static CorrelationStrategy fixed(std::size_t k) { return {CorrelationKind::Fixed, k, 0, 0, 0, 1}; }
  static CorrelationStrategy max(std::size_t k) { return {CorrelationKind::Max, k, 0, 0, 0, 1}; }
  static CorrelationStrategy maxpool(std::size_t c, std::size_t h, std::size_t w, std::size_t s) {
    return {CorrelationKind::MaxPool, 0, c, h, w, s};
  }
};

// Dimensions to correlate, chosen per example. All -> every dimension;
// Fixed(k) -> { floor(i*p/k) }; Max(k) -> the k largest interval upper bounds
// (ties to the lowest index); MaxPool -> one argmax index per pooling window
// over the center (before the first parameterized layer) or the uncorrelated
// radius (after).
IndexSets select_correlation_indices(const CorrelationStrategy& strategy,
                                     const HybridZonotope& h, bool is_first_layer);

// Moves the uncorrelated radius of each selected dimension into a fresh
// correlated column. The concretization is unchanged (set equality).
HybridZonotope correlate(const HybridZonotope& h, const IndexSets& sets);
HybridZonotope correlate(const HybridZonotope& h, const std::vector<std::size_t>& indices);

// Error-term columns to remove so that k columns survive: the m-k columns
// with the smallest absolute sums over all dimensions (ties to lowest index).
IndexSets select_decorrelation_removals(const HybridZonotope& h, std::size_t k);

// Folds the removed columns' absolute values into the uncorrelated radius;
// surviving columns shift left, order preserved. Over-approximates.
HybridZonotope decorrelate(const HybridZonotope& h, const IndexSets& removals);
HybridZonotope decorrelate(const HybridZonotope& h, const std::vector<std::size_t>& removals);

enum class PositiveActivation { Relu };

// Intermediate-provability loss on interval bounds c ([B,n] each side):
// mean over the batch of (1/2n) sum_i (L_lb,i + L_ub,i), where L_lb,i is the
// worst overlap f(c_{j,2} - c_{i,1}) over j != i with c_{j,1} <= c_{i,1}
// (empty set -> 0) and L_ub is symmetric.
Tensor deep_loss_naive(const Interval& c, PositiveActivation f = PositiveActivation::Relu);
// Sort + prefix-maxima implementation, O(n log n); agrees with the naive one.
Tensor deep_loss_fast(const Interval& c, PositiveActivation f = PositiveActivation::Relu);
inline Tensor deep_loss(const Interval& c, PositiveActivation f = PositiveActivation::Relu) {
  return deep_loss_fast(c, f);
}

}  // namespace hzcert
