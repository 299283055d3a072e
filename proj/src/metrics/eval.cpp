#include "ifl/metrics/eval.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ifl/parallel.hpp"
#include "ifl/protocols/compose.hpp"

namespace ifl::metrics {

Tensor<float> base_outputs(const Block<float>& base, const data::Dataset& ds, int chunk) {
    if (chunk <= 0) throw std::invalid_argument("base_outputs: chunk must be positive");
    const int n = static_cast<int>(ds.size());
    if (n == 0) throw std::invalid_argument("base_outputs: empty dataset");
    Tensor<float> out;
    Tensor<float> x;
    std::vector<int> y, idx;
    for (int start = 0; start < n; start += chunk) {
        const int stop = std::min(n, start + chunk);
        idx.resize(static_cast<std::size_t>(stop - start));
        std::iota(idx.begin(), idx.end(), start);
        data::gather(ds, idx, x, y);
        const auto z = forward(base, x);
        if (z.rank() != 2)
            throw std::invalid_argument("base_outputs: base must emit flattened features");
        if (out.empty()) out = Tensor<float>::zeros({static_cast<Index>(n), z.dim(1)});
        out.mat(static_cast<Index>(n), z.dim(1))
            .middleRows(start, stop - start) = z.mat(z.dim(0), z.dim(1));
    }
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || predicted.empty())
        throw std::invalid_argument("accuracy: label vectors must match and be non-empty");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double test_accuracy(const Block<float>& base, const Block<float>& modular,
                     const data::Dataset& test, int chunk) {
    const auto z = base_outputs(base, test, chunk);
    const auto pred = proto::predictions(forward(modular, z));
    return accuracy(pred, test.labels);
}

Eigen::MatrixXd composition_matrix(const std::vector<const Block<float>*>& bases,
                                   const std::vector<const Block<float>*>& modulars,
                                   const data::Dataset& test, int threads, int chunk) {
    if (bases.empty() || modulars.empty())
        throw std::invalid_argument("composition_matrix: need at least one base and one modular");
    std::vector<Tensor<float>> z(bases.size());
    parallel_for(bases.size(), threads,
                 [&](std::size_t i) { z[i] = base_outputs(*bases[i], test, chunk); });
    Eigen::MatrixXd acc(bases.size(), modulars.size());
    parallel_for(bases.size() * modulars.size(), threads, [&](std::size_t cell) {
        const std::size_t i = cell / modulars.size();
        const std::size_t j = cell % modulars.size();
        const auto pred = proto::predictions(forward(*modulars[j], z[i]));
        acc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            accuracy(pred, test.labels);
    });
    return acc;
}

std::vector<double> composition_sd_pp(const Eigen::MatrixXd& acc) {
    if (acc.cols() < 2)
        throw std::invalid_argument("composition_sd_pp: need at least two modular blocks");
    std::vector<double> out(static_cast<std::size_t>(acc.rows()));
    for (Eigen::Index i = 0; i < acc.rows(); ++i) {
        const double mean = acc.row(i).mean();
        const double var = (acc.row(i).array() - mean).square().mean();
        out[static_cast<std::size_t>(i)] = 100.0 * std::sqrt(var);
    }
    return out;
}

}  // namespace ifl::metrics
