#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ifl/tensor.hpp"

namespace ifl::data {

inline constexpr int kNumClasses = 10;

// Immutable once loaded; freely shareable across clients and threads.
struct Dataset {
    Tensor<float> images;     // [n, 1, rows, cols], pixel values in [0,1]
    std::vector<int> labels;  // values in 0..9

    Index size() const { return images.empty() ? 0 : images.dim(0); }
};

void validate(const Dataset& ds);

// First n samples (file order); n <= 0 or n >= size returns the whole set.
Dataset take_prefix(const Dataset& ds, Index n);

// Materializes the rows at the given indices as a batch.
void gather(const Dataset& ds, std::span<const int> indices, Tensor<float>& x,
            std::vector<int>& y);

// Loads one split from a directory with the usual IDX file names
// (train-images-idx3-ubyte / t10k-images-idx3-ubyte and label companions).
Dataset load_split(const std::filesystem::path& dir, bool train);

}  // namespace ifl::data
