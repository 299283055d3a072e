#pragma once

#include <cmath>
#include <random>
#include <span>

#include "ifl/block.hpp"

namespace ifl {

// Zero-mean normal weights scaled by fan-in (variance 2/fan_in, the usual
// choice under ReLU); draws happen in double so the stream is scalar-agnostic.
template <typename S>
Tensor<S> he_normal(Shape shape, Index fan_in, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<S> t = Tensor<S>::zeros(std::move(shape));
    for (Index i = 0; i < t.numel(); ++i) t.data[i] = static_cast<S>(dist(rng));
    return t;
}

// Materializes one layer: fan-in-scaled weights, zero biases, fully
// determined by the RNG stream.
template <typename S>
Layer<S> init_params(const LayerSpec& spec, std::mt19937_64& rng) {
    switch (spec.kind) {
        case LayerKind::dense: {
            DenseLayer<S> l;
            l.weight = he_normal<S>({spec.out_dim, spec.in_dim}, spec.in_dim, rng);
            l.bias = Tensor<S>::zeros({spec.out_dim});
            return l;
        }
        case LayerKind::conv2d: {
            Conv2dLayer<S> l;
            l.weight = he_normal<S>({spec.out_dim, spec.in_dim, kConvKernel, kConvKernel},
                                    static_cast<Index>(spec.in_dim) * kConvKernel * kConvKernel,
                                    rng);
            l.bias = Tensor<S>::zeros({spec.out_dim});
            return l;
        }
        case LayerKind::maxpool2d:
            return MaxPool2dLayer<S>{};
        case LayerKind::relu:
            return ReluLayer<S>{};
        case LayerKind::flatten:
            return FlattenLayer<S>{};
    }
    throw std::invalid_argument("init_params: unknown layer kind");
}

template <typename S>
Block<S> init_block(std::span<const LayerSpec> specs, std::mt19937_64& rng) {
    Block<S> b;
    b.layers.reserve(specs.size());
    for (const auto& spec : specs) b.layers.push_back(init_params<S>(spec, rng));
    return b;
}

}  // namespace ifl
