#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ifl/data/dataset.hpp"

namespace ifl::data {

// Deterministic mini-batch index stream over one client's shard. Every batch
// has exactly batch_size samples; the trailing partial batch of an epoch is
// dropped and the shard is reshuffled, driven only by the owned RNG stream.
class BatchSampler {
  public:
    BatchSampler(std::vector<int> indices, int batch_size, std::mt19937_64 rng);

    std::span<const int> next();

    int batch_size() const { return batch_size_; }
    std::size_t shard_size() const { return indices_.size(); }

  private:
    void reshuffle();

    std::vector<int> indices_;
    int batch_size_;
    std::mt19937_64 rng_;
    std::size_t cursor_{0};
};

std::pair<Tensor<float>, std::vector<int>> next_batch(BatchSampler& sampler, const Dataset& ds);

}  // namespace ifl::data
