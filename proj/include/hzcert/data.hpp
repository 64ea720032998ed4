#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hzcert/tensor.hpp"

namespace hzcert {

struct Dataset {
  Shape var_shape;            // per-example variable shape
  std::vector<double> values; // count * numel(var_shape), in [lo,hi]
  std::vector<int> labels;
  std::size_t num_classes = 0;
  double lo = 0.0, hi = 1.0;

  std::size_t count() const { return labels.size(); }
  std::size_t dim() const { return shape_numel(var_shape); }
  // rows of `idx` stacked into a [n, dim] tensor (constant)
  Tensor batch(const std::vector<std::size_t>& idx) const;
  Tensor example(std::size_t i) const;  // [1, dim]
};

// Big-endian IDX files (magic 0x803 for u8 images, 0x801 for labels);
// pixels scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Two linearly separable Gaussian blobs in [0,1]^2.
Dataset synthetic_blobs(std::size_t n, double noise, std::uint64_t seed);
// Two interleaved half-moons in [0,1]^2 (not linearly separable).
Dataset synthetic_moons(std::size_t n, double noise, std::uint64_t seed);

// Deterministic split: every (1/test_fraction)-th example goes to test.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double test_fraction);

}  // namespace hzcert
