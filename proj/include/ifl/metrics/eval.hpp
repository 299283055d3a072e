#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ifl/data/dataset.hpp"
#include "ifl/models/model_spec.hpp"

namespace ifl::metrics {

// Fusion-layer outputs of `base` over the whole dataset, in sample order.
// Evaluated in chunks to bound the im2col working set.
Tensor<float> base_outputs(const Block<float>& base, const data::Dataset& ds, int chunk = 256);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

double test_accuracy(const Block<float>& base, const Block<float>& modular,
                     const data::Dataset& test, int chunk = 256);

// acc(i, j) = accuracy of base i composed with modular block j. Base outputs
// are computed once per base and reused across the row. `threads` only
// affects scheduling, never the numbers.
Eigen::MatrixXd composition_matrix(const std::vector<const Block<float>*>& bases,
                                   const std::vector<const Block<float>*>& modulars,
                                   const data::Dataset& test, int threads, int chunk = 256);

// Per-row population standard deviation of the composition matrix, in
// percentage points: how much a base's accuracy swings across vendors'
// modular blocks. Needs at least two columns to mean anything.
std::vector<double> composition_sd_pp(const Eigen::MatrixXd& acc);

}  // namespace ifl::metrics
