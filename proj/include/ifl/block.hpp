#pragma once

#include <string>
#include <vector>

#include "ifl/layers.hpp"

namespace ifl {

// An ordered stack of layers. Blocks are single-owner while training; the
// const forward path is safe to share across threads.
template <typename S>
struct Block {
    std::vector<Layer<S>> layers;
};

namespace detail {
[[noreturn]] inline void rethrow_with_layer(std::size_t i, LayerKind kind, const char* what) {
    throw std::invalid_argument("layer " + std::to_string(i) + " (" +
                                std::string(to_string(kind)) + "): " + what);
}
}  // namespace detail

// Training forward: every layer caches its input for the next backward pass.
template <typename S>
Tensor<S> forward(Block<S>& block, const Tensor<S>& input) {
    Tensor<S> cur = input;
    for (std::size_t i = 0; i < block.layers.size(); ++i) {
        try {
            cur = forward_cached(block.layers[i], cur);
        } catch (const std::invalid_argument& e) {
            detail::rethrow_with_layer(i, kind_of(block.layers[i]), e.what());
        }
    }
    return cur;
}

// Inference forward: no caching, usable on shared const blocks.
template <typename S>
Tensor<S> forward(const Block<S>& block, const Tensor<S>& input) {
    Tensor<S> cur = input;
    for (std::size_t i = 0; i < block.layers.size(); ++i) {
        try {
            cur = forward(block.layers[i], cur);
        } catch (const std::invalid_argument& e) {
            detail::rethrow_with_layer(i, kind_of(block.layers[i]), e.what());
        }
    }
    return cur;
}

template <typename S>
struct BlockGrads {
    Tensor<S> input;                 // dLoss/dInput
    std::vector<Tensor<S>> params;   // flat, aligned with for_each_param order
};

// Backpropagates output_grad through the block using the inputs cached by the
// last training forward. Parameters are left untouched.
template <typename S>
BlockGrads<S> backward(const Block<S>& block, const Tensor<S>& output_grad) {
    BlockGrads<S> out;
    std::vector<std::vector<Tensor<S>>> per_layer(block.layers.size());
    Tensor<S> grad = output_grad;
    for (std::size_t i = block.layers.size(); i-- > 0;) {
        LayerGrads<S> g;
        try {
            g = backward(block.layers[i], grad);
        } catch (const std::invalid_argument& e) {
            detail::rethrow_with_layer(i, kind_of(block.layers[i]), e.what());
        }
        per_layer[i] = std::move(g.params);
        grad = std::move(g.input_grad);
    }
    out.input = std::move(grad);
    for (auto& layer_grads : per_layer)
        for (auto& t : layer_grads) out.params.push_back(std::move(t));
    return out;
}

template <typename S, typename F>
void for_each_param(Block<S>& block, F&& fn) {
    for (auto& layer : block.layers) for_each_param(layer, fn);
}

template <typename S, typename F>
void for_each_param(const Block<S>& block, F&& fn) {
    for (const auto& layer : block.layers) for_each_param(layer, fn);
}

template <typename S>
Index param_count(const Block<S>& block) {
    Index n = 0;
    for_each_param(block, [&](const Tensor<S>& t) { n += t.numel(); });
    return n;
}

template <typename S>
bool bitwise_equal(const Block<S>& a, const Block<S>& b) {
    if (a.layers.size() != b.layers.size()) return false;
    std::vector<const Tensor<S>*> pa, pb;
    for_each_param(a, [&](const Tensor<S>& t) { pa.push_back(&t); });
    for_each_param(b, [&](const Tensor<S>& t) { pb.push_back(&t); });
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (!bitwise_equal(*pa[i], *pb[i])) return false;
    return true;
}

// Deep copy of parameters from src into dst; shapes must already agree.
template <typename S>
void copy_params(Block<S>& dst, const Block<S>& src) {
    std::vector<const Tensor<S>*> from;
    for_each_param(src, [&](const Tensor<S>& t) { from.push_back(&t); });
    std::size_t i = 0;
    for_each_param(dst, [&](Tensor<S>& t) {
        if (i >= from.size() || t.shape != from[i]->shape)
            throw std::invalid_argument("copy_params: mismatched block structure");
        t.data = from[i]->data;
        ++i;
    });
    if (i != from.size()) throw std::invalid_argument("copy_params: mismatched block structure");
}

}  // namespace ifl
