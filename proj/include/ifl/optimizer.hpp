#pragma once

#include <cmath>
#include <vector>

#include "ifl/block.hpp"

namespace ifl {

// Plain SGD. Training configs require a strictly positive rate; a zero rate
// is accepted here so a frozen component is expressible as lr == 0.
template <typename S>
struct OptimizerConfig {
    S learning_rate;
};

template <typename S>
void sgd_step(Tensor<S>& param, const Tensor<S>& grad, const OptimizerConfig<S>& cfg) {
    if (!(cfg.learning_rate >= S(0)) || !std::isfinite(static_cast<double>(cfg.learning_rate)))
        throw std::invalid_argument("sgd_step: learning rate must be finite and non-negative");
    if (param.shape != grad.shape)
        throw std::invalid_argument("sgd_step: param " + shape_str(param.shape) +
                                    " vs grad " + shape_str(grad.shape));
    if (cfg.learning_rate == S(0)) return;
    param.data -= cfg.learning_rate * grad.data;
}

// Applies one step to every parameter of the block; grads must be ordered as
// produced by backward() / for_each_param().
template <typename S>
void sgd_step(Block<S>& block, const std::vector<Tensor<S>>& grads, const OptimizerConfig<S>& cfg) {
    std::size_t i = 0;
    for_each_param(block, [&](Tensor<S>& p) {
        if (i >= grads.size())
            throw std::invalid_argument("sgd_step: fewer grads than parameters");
        sgd_step(p, grads[i], cfg);
        ++i;
    });
    if (i != grads.size())
        throw std::invalid_argument("sgd_step: more grads than parameters");
}

// In-place grad accumulation, used by the summed update rule.
template <typename S>
void accumulate(std::vector<Tensor<S>>& acc, const std::vector<Tensor<S>>& grads) {
    if (acc.empty()) {
        acc = grads;
        return;
    }
    if (acc.size() != grads.size())
        throw std::invalid_argument("accumulate: mismatched grad lists");
    for (std::size_t i = 0; i < acc.size(); ++i) {
        if (acc[i].shape != grads[i].shape)
            throw std::invalid_argument("accumulate: mismatched grad shapes");
        acc[i].data += grads[i].data;
    }
}

}  // namespace ifl
