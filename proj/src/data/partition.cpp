#include "ifl/data/partition.hpp"

#include <algorithm>
#include <numeric>

#include "ifl/data/dataset.hpp"
#include "ifl/errors.hpp"

namespace ifl::data {

std::size_t Partition::total() const {
    std::size_t n = 0;
    for (const auto& list : client_indices) n += list.size();
    return n;
}

namespace {

// Dir(alpha * 1_N) via normalized gamma draws.
std::vector<double> dirichlet_proportions(int n, double alpha, std::mt19937_64& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> p(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& v : p) {
        v = gamma(rng);
        sum += v;
    }
    if (sum <= 0.0) {
        // All-zero draw is possible for tiny alpha; fall back to one winner.
        p.assign(p.size(), 0.0);
        p[rng() % p.size()] = 1.0;
        return p;
    }
    for (auto& v : p) v /= sum;
    return p;
}

// Integer split of `total` following `p` with largest-remainder rounding.
std::vector<int> largest_remainder_counts(const std::vector<double>& p, int total) {
    const int n = static_cast<int>(p.size());
    std::vector<int> counts(static_cast<std::size_t>(n));
    std::vector<std::pair<double, int>> remainders(static_cast<std::size_t>(n));
    int assigned = 0;
    for (int i = 0; i < n; ++i) {
        const double exact = p[static_cast<std::size_t>(i)] * total;
        counts[static_cast<std::size_t>(i)] = static_cast<int>(exact);
        assigned += counts[static_cast<std::size_t>(i)];
        remainders[static_cast<std::size_t>(i)] = {exact - counts[static_cast<std::size_t>(i)], i};
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // deterministic tie-break
    });
    for (int k = 0; k < total - assigned; ++k)
        ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(k)].second)];
    return counts;
}

}  // namespace

Partition dirichlet_partition(std::span<const int> labels, int n_clients, double alpha,
                              std::mt19937_64& rng, int min_per_client, int max_attempts) {
    if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
    if (labels.size() < static_cast<std::size_t>(n_clients) * std::max(min_per_client, 1))
        throw DataError("dirichlet_partition: " + std::to_string(labels.size()) +
                        " samples cannot give " + std::to_string(n_clients) +
                        " clients at least " + std::to_string(min_per_client) + " each");

    std::vector<std::vector<int>> by_class(kNumClasses);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Partition part;
        part.client_indices.assign(static_cast<std::size_t>(n_clients), {});
        for (const auto& cls : by_class) {
            if (cls.empty()) continue;
            const auto p = dirichlet_proportions(n_clients, alpha, rng);
            const auto counts = largest_remainder_counts(p, static_cast<int>(cls.size()));
            std::size_t offset = 0;
            for (int k = 0; k < n_clients; ++k) {
                auto& dst = part.client_indices[static_cast<std::size_t>(k)];
                dst.insert(dst.end(), cls.begin() + static_cast<std::ptrdiff_t>(offset),
                           cls.begin() + static_cast<std::ptrdiff_t>(offset) +
                               counts[static_cast<std::size_t>(k)]);
                offset += static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]);
            }
        }
        const bool ok = std::all_of(
            part.client_indices.begin(), part.client_indices.end(), [&](const auto& list) {
                return list.size() >= static_cast<std::size_t>(std::max(min_per_client, 1));
            });
        if (ok) return part;
    }
    throw DataError("dirichlet_partition: could not satisfy the per-client minimum after " +
                    std::to_string(max_attempts) + " attempts (alpha=" + std::to_string(alpha) +
                    ", n_clients=" + std::to_string(n_clients) + ")");
}

}  // namespace ifl::data
