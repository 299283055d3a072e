#pragma once

#include <algorithm>
#include <variant>
#include <vector>

#include "ifl/layer_spec.hpp"
#include "ifl/tensor.hpp"

namespace ifl {

// Layers own their parameters plus one cached forward input, consumed by the
// next backward pass. Interleaving two forwards on the same layer without a
// backward in between is a caller error.

template <typename S>
struct DenseLayer {
    Tensor<S> weight;  // [out, in]
    Tensor<S> bias;    // [out]
    Tensor<S> cached_input;

    Index in_dim() const { return weight.dim(1); }
    Index out_dim() const { return weight.dim(0); }
};

template <typename S>
struct Conv2dLayer {
    Tensor<S> weight;  // [out_ch, in_ch, 3, 3]
    Tensor<S> bias;    // [out_ch]
    Tensor<S> cached_input;

    Index in_channels() const { return weight.dim(1); }
    Index out_channels() const { return weight.dim(0); }
};

template <typename S>
struct MaxPool2dLayer {
    Tensor<S> cached_input;
};

template <typename S>
struct ReluLayer {
    Tensor<S> cached_input;
};

template <typename S>
struct FlattenLayer {
    Shape cached_shape;
};

template <typename S>
using Layer =
    std::variant<DenseLayer<S>, Conv2dLayer<S>, MaxPool2dLayer<S>, ReluLayer<S>, FlattenLayer<S>>;

template <typename S>
struct LayerGrads {
    Tensor<S> input_grad;
    std::vector<Tensor<S>> params;  // same order as for_each_param: weight, bias
};

namespace detail {

inline void require_cached(bool have, const char* kind) {
    if (!have)
        throw std::logic_error(std::string(kind) + ": backward called before forward");
}

// Patch matrix of x under a 3x3 / stride 1 / pad 1 convolution:
// [B*H*W, C*9], row (b*H+i)*W+j, column (ch*3+ki)*3+kj. Column-major so the
// per-(ki,kj) row segments of x land in contiguous runs.
template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> im2col(const Tensor<S>& x) {
    const Index b_n = x.dim(0), c_n = x.dim(1), h = x.dim(2), w = x.dim(3);
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> cols(b_n * h * w,
                                                          c_n * kConvKernel * kConvKernel);
    cols.setZero();
    for (Index ch = 0; ch < c_n; ++ch) {
        for (int ki = 0; ki < kConvKernel; ++ki) {
            for (int kj = 0; kj < kConvKernel; ++kj) {
                const Index col = (ch * kConvKernel + ki) * kConvKernel + kj;
                const Index di = ki - kConvPad, dj = kj - kConvPad;
                const Index j_lo = std::max<Index>(0, -dj);
                const Index j_hi = std::min<Index>(w, w - dj);
                if (j_hi <= j_lo) continue;
                S* dst_col = cols.data() + col * cols.rows();
                for (Index b = 0; b < b_n; ++b) {
                    for (Index i = 0; i < h; ++i) {
                        const Index si = i + di;
                        if (si < 0 || si >= h) continue;
                        const S* src = x.data.data() + ((b * c_n + ch) * h + si) * w + j_lo + dj;
                        std::copy(src, src + (j_hi - j_lo), dst_col + (b * h + i) * w + j_lo);
                    }
                }
            }
        }
    }
    return cols;
}

// Scatter-add of a patch-matrix gradient back onto the input layout.
template <typename S>
void col2im_add(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& cols, Tensor<S>& dx) {
    const Index b_n = dx.dim(0), c_n = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
    for (Index ch = 0; ch < c_n; ++ch) {
        for (int ki = 0; ki < kConvKernel; ++ki) {
            for (int kj = 0; kj < kConvKernel; ++kj) {
                const Index col = (ch * kConvKernel + ki) * kConvKernel + kj;
                const Index di = ki - kConvPad, dj = kj - kConvPad;
                const Index j_lo = std::max<Index>(0, -dj);
                const Index j_hi = std::min<Index>(w, w - dj);
                if (j_hi <= j_lo) continue;
                const S* src_col = cols.data() + col * cols.rows();
                for (Index b = 0; b < b_n; ++b) {
                    for (Index i = 0; i < h; ++i) {
                        const Index si = i + di;
                        if (si < 0 || si >= h) continue;
                        const S* src = src_col + (b * h + i) * w + j_lo;
                        S* dst = dx.data.data() + ((b * c_n + ch) * h + si) * w + j_lo + dj;
                        for (Index n = 0; n < j_hi - j_lo; ++n) dst[n] += src[n];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// ---- dense ----

template <typename S>
Tensor<S> forward(const DenseLayer<S>& l, const Tensor<S>& x) {
    if (x.rank() != 2 || x.dim(1) != l.in_dim())
        throw std::invalid_argument("dense: input " + shape_str(x.shape) +
                                    " incompatible with weight " + shape_str(l.weight.shape));
    Tensor<S> y = Tensor<S>::zeros({x.dim(0), l.out_dim()});
    y.mat().noalias() = x.mat() * l.weight.mat().transpose();
    y.mat().rowwise() += l.bias.data.matrix().transpose();
    return y;
}

template <typename S>
LayerGrads<S> backward(const DenseLayer<S>& l, const Tensor<S>& gy) {
    detail::require_cached(!l.cached_input.empty(), "dense");
    const Tensor<S>& x = l.cached_input;
    if (gy.rank() != 2 || gy.dim(0) != x.dim(0) || gy.dim(1) != l.out_dim())
        throw std::invalid_argument("dense: output grad " + shape_str(gy.shape) +
                                    " does not match forward output [" +
                                    std::to_string(x.dim(0)) + "," + std::to_string(l.out_dim()) +
                                    "]");
    LayerGrads<S> g;
    g.params.resize(2);
    g.params[0] = Tensor<S>::zeros(l.weight.shape);
    g.params[0].mat().noalias() = gy.mat().transpose() * x.mat();
    g.params[1] = Tensor<S>::zeros(l.bias.shape);
    g.params[1].data = gy.mat().colwise().sum().transpose().array();
    g.input_grad = Tensor<S>::zeros(x.shape);
    g.input_grad.mat().noalias() = gy.mat() * l.weight.mat();
    return g;
}

// ---- conv2d (3x3, stride 1, pad 1) ----

template <typename S>
Tensor<S> forward(const Conv2dLayer<S>& l, const Tensor<S>& x) {
    if (x.rank() != 4 || x.dim(1) != l.in_channels())
        throw std::invalid_argument("conv2d: input " + shape_str(x.shape) +
                                    " incompatible with weight " + shape_str(l.weight.shape));
    const Index b_n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const Index oc = l.out_channels(), patch = l.in_channels() * kConvKernel * kConvKernel;
    const auto cols = detail::im2col(x);
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> y_col(b_n * h * w, oc);
    y_col.noalias() = cols * l.weight.mat(oc, patch).transpose();
    y_col.rowwise() += l.bias.data.matrix().transpose();

    Tensor<S> y = Tensor<S>::zeros({b_n, oc, h, w});
    const Index plane = h * w;
    for (Index b = 0; b < b_n; ++b) {
        typename Tensor<S>::MatrixMap out(y.data.data() + b * oc * plane, oc, plane);
        out.noalias() = y_col.middleRows(b * plane, plane).transpose();
    }
    return y;
}

template <typename S>
LayerGrads<S> backward(const Conv2dLayer<S>& l, const Tensor<S>& gy) {
    detail::require_cached(!l.cached_input.empty(), "conv2d");
    const Tensor<S>& x = l.cached_input;
    const Index b_n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const Index oc = l.out_channels(), patch = l.in_channels() * kConvKernel * kConvKernel;
    if (gy.shape != Shape{b_n, oc, h, w})
        throw std::invalid_argument("conv2d: output grad " + shape_str(gy.shape) +
                                    " does not match forward output " +
                                    shape_str({b_n, oc, h, w}));

    const Index plane = h * w;
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> gy_col(b_n * plane, oc);
    for (Index b = 0; b < b_n; ++b) {
        typename Tensor<S>::ConstMatrixMap in(gy.data.data() + b * oc * plane, oc, plane);
        gy_col.middleRows(b * plane, plane).noalias() = in.transpose();
    }

    const auto cols = detail::im2col(x);
    LayerGrads<S> g;
    g.params.resize(2);
    g.params[0] = Tensor<S>::zeros(l.weight.shape);
    g.params[0].mat(oc, patch).noalias() = gy_col.transpose() * cols;
    g.params[1] = Tensor<S>::zeros(l.bias.shape);
    g.params[1].data = gy_col.colwise().sum().transpose().array();

    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> dcols(b_n * plane, patch);
    dcols.noalias() = gy_col * l.weight.mat(oc, patch);
    g.input_grad = Tensor<S>::zeros(x.shape);
    detail::col2im_add(dcols, g.input_grad);
    return g;
}

// ---- maxpool2d (2x2, stride 2, floor on odd sizes) ----

template <typename S>
Tensor<S> forward(const MaxPool2dLayer<S>&, const Tensor<S>& x) {
    if (x.rank() != 4)
        throw std::invalid_argument("maxpool2d: input " + shape_str(x.shape) + " is not [B,C,H,W]");
    const Index b_n = x.dim(0), c_n = x.dim(1), h = x.dim(2), w = x.dim(3);
    const Index ho = h / kPoolStride, wo = w / kPoolStride;
    Tensor<S> y = Tensor<S>::zeros({b_n, c_n, ho, wo});
    for (Index bc = 0; bc < b_n * c_n; ++bc) {
        const S* in = x.data.data() + bc * h * w;
        S* out = y.data.data() + bc * ho * wo;
        for (Index i = 0; i < ho; ++i) {
            const S* r0 = in + 2 * i * w;
            const S* r1 = r0 + w;
            for (Index j = 0; j < wo; ++j) {
                const Index j2 = 2 * j;
                out[i * wo + j] =
                    std::max(std::max(r0[j2], r0[j2 + 1]), std::max(r1[j2], r1[j2 + 1]));
            }
        }
    }
    return y;
}

template <typename S>
LayerGrads<S> backward(const MaxPool2dLayer<S>& l, const Tensor<S>& gy) {
    detail::require_cached(!l.cached_input.empty(), "maxpool2d");
    const Tensor<S>& x = l.cached_input;
    const Index b_n = x.dim(0), c_n = x.dim(1), h = x.dim(2), w = x.dim(3);
    const Index ho = h / kPoolStride, wo = w / kPoolStride;
    if (gy.shape != Shape{b_n, c_n, ho, wo})
        throw std::invalid_argument("maxpool2d: output grad " + shape_str(gy.shape) +
                                    " does not match forward output " +
                                    shape_str({b_n, c_n, ho, wo}));
    LayerGrads<S> g;
    g.input_grad = Tensor<S>::zeros(x.shape);
    for (Index bc = 0; bc < b_n * c_n; ++bc) {
        const S* in = x.data.data() + bc * h * w;
        const S* gout = gy.data.data() + bc * ho * wo;
        S* gin = g.input_grad.data.data() + bc * h * w;
        for (Index i = 0; i < ho; ++i) {
            for (Index j = 0; j < wo; ++j) {
                // First maximum in scan order wins ties; deterministic.
                Index best = 2 * i * w + 2 * j;
                const Index cand[3] = {best + 1, best + w, best + w + 1};
                for (Index c : cand)
                    if (in[c] > in[best]) best = c;
                gin[best] += gout[i * wo + j];
            }
        }
    }
    return g;
}

// ---- relu ----

template <typename S>
Tensor<S> forward(const ReluLayer<S>&, const Tensor<S>& x) {
    Tensor<S> y;
    y.shape = x.shape;
    y.data = x.data.max(S(0));
    return y;
}

template <typename S>
LayerGrads<S> backward(const ReluLayer<S>& l, const Tensor<S>& gy) {
    detail::require_cached(!l.cached_input.empty(), "relu");
    const Tensor<S>& x = l.cached_input;
    if (gy.shape != x.shape)
        throw std::invalid_argument("relu: output grad " + shape_str(gy.shape) +
                                    " does not match input " + shape_str(x.shape));
    LayerGrads<S> g;
    g.input_grad.shape = x.shape;
    g.input_grad.data = (x.data > S(0)).select(gy.data, S(0));
    return g;
}

// ---- flatten ----

template <typename S>
Tensor<S> forward(const FlattenLayer<S>&, const Tensor<S>& x) {
    if (x.rank() < 2)
        throw std::invalid_argument("flatten: input " + shape_str(x.shape) +
                                    " has no batch dimension");
    return x.reshaped({x.dim(0), x.numel() / x.dim(0)});
}

template <typename S>
LayerGrads<S> backward(const FlattenLayer<S>& l, const Tensor<S>& gy) {
    detail::require_cached(!l.cached_shape.empty(), "flatten");
    if (gy.numel() != shape_numel(l.cached_shape))
        throw std::invalid_argument("flatten: output grad " + shape_str(gy.shape) +
                                    " does not match cached input " + shape_str(l.cached_shape));
    LayerGrads<S> g;
    g.input_grad = gy.reshaped(l.cached_shape);
    return g;
}

// ---- variant-level dispatch ----

template <typename S>
LayerKind kind_of(const Layer<S>& layer) {
    return std::visit(
        [](const auto& l) -> LayerKind {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, DenseLayer<S>>) return LayerKind::dense;
            else if constexpr (std::is_same_v<L, Conv2dLayer<S>>) return LayerKind::conv2d;
            else if constexpr (std::is_same_v<L, MaxPool2dLayer<S>>) return LayerKind::maxpool2d;
            else if constexpr (std::is_same_v<L, ReluLayer<S>>) return LayerKind::relu;
            else return LayerKind::flatten;
        },
        layer);
}

template <typename S>
LayerSpec spec_of(const Layer<S>& layer) {
    return std::visit(
        [](const auto& l) -> LayerSpec {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, DenseLayer<S>>)
                return LayerSpec::dense(static_cast<int>(l.in_dim()),
                                        static_cast<int>(l.out_dim()));
            else if constexpr (std::is_same_v<L, Conv2dLayer<S>>)
                return LayerSpec::conv2d(static_cast<int>(l.in_channels()),
                                         static_cast<int>(l.out_channels()));
            else if constexpr (std::is_same_v<L, MaxPool2dLayer<S>>)
                return LayerSpec::maxpool2d();
            else if constexpr (std::is_same_v<L, ReluLayer<S>>)
                return LayerSpec::relu();
            else
                return LayerSpec::flatten();
        },
        layer);
}

// Pure forward; leaves the layer's cache untouched.
template <typename S>
Tensor<S> forward(const Layer<S>& layer, const Tensor<S>& x) {
    return std::visit([&](const auto& l) { return forward(l, x); }, layer);
}

// Forward that records the input for the next backward pass.
template <typename S>
Tensor<S> forward_cached(Layer<S>& layer, const Tensor<S>& x) {
    return std::visit(
        [&](auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, FlattenLayer<S>>) l.cached_shape = x.shape;
            else l.cached_input = x;
            return forward(std::as_const(l), x);
        },
        layer);
}

template <typename S>
LayerGrads<S> backward(const Layer<S>& layer, const Tensor<S>& gy) {
    return std::visit([&](const auto& l) { return backward(l, gy); }, layer);
}

// Visits the layer's parameter tensors in a fixed order (weight, then bias).
template <typename S, typename F>
void for_each_param(Layer<S>& layer, F&& fn) {
    std::visit(
        [&](auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, DenseLayer<S>> || std::is_same_v<L, Conv2dLayer<S>>) {
                fn(l.weight);
                fn(l.bias);
            }
        },
        layer);
}

template <typename S, typename F>
void for_each_param(const Layer<S>& layer, F&& fn) {
    std::visit(
        [&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, DenseLayer<S>> || std::is_same_v<L, Conv2dLayer<S>>) {
                fn(l.weight);
                fn(l.bias);
            }
        },
        layer);
}

}  // namespace ifl
