#include "ifl/data/sampler.hpp"

#include <algorithm>

#include "ifl/errors.hpp"

namespace ifl::data {

BatchSampler::BatchSampler(std::vector<int> indices, int batch_size, std::mt19937_64 rng)
    : indices_(std::move(indices)), batch_size_(batch_size), rng_(rng) {
    if (batch_size_ < 1) throw std::invalid_argument("BatchSampler: batch size must be >= 1");
    if (indices_.size() < static_cast<std::size_t>(batch_size_))
        throw DataError("BatchSampler: batch size " + std::to_string(batch_size_) +
                        " exceeds shard size " + std::to_string(indices_.size()));
    reshuffle();
}

void BatchSampler::reshuffle() {
    std::shuffle(indices_.begin(), indices_.end(), rng_);
    cursor_ = 0;
}

std::span<const int> BatchSampler::next() {
    if (cursor_ + static_cast<std::size_t>(batch_size_) > indices_.size()) reshuffle();
    std::span<const int> batch(indices_.data() + cursor_, static_cast<std::size_t>(batch_size_));
    cursor_ += static_cast<std::size_t>(batch_size_);
    return batch;
}

std::pair<Tensor<float>, std::vector<int>> next_batch(BatchSampler& sampler, const Dataset& ds) {
    std::pair<Tensor<float>, std::vector<int>> out;
    gather(ds, sampler.next(), out.first, out.second);
    return out;
}

}  // namespace ifl::data
