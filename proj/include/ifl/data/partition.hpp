#pragma once

#include <random>
#include <span>
#include <vector>

namespace ifl::data {

// Disjoint index lists into a parent dataset, one per client.
struct Partition {
    std::vector<std::vector<int>> client_indices;

    int n_clients() const { return static_cast<int>(client_indices.size()); }
    std::size_t total() const;
};

// Class-wise Dirichlet split: for every class, proportions are drawn from
// Dir(alpha * 1_N) and the class's indices are divided by largest-remainder
// rounding, so the result is an exact partition. If any client ends up with
// fewer than min_per_client samples the whole draw is repeated, up to
// max_attempts times.
Partition dirichlet_partition(std::span<const int> labels, int n_clients, double alpha,
                              std::mt19937_64& rng, int min_per_client = 1,
                              int max_attempts = 100);

}  // namespace ifl::data
