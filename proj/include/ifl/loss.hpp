#pragma once

#include <cmath>
#include <span>

#include "ifl/tensor.hpp"

namespace ifl {

template <typename S>
struct LossResult {
    S loss;                  // mean over the batch
    Tensor<S> logit_grad;    // (softmax - one_hot) / batch
};

// Softmax cross-entropy over logits [B, C] with integer class labels.
// Row-max subtraction keeps the exponentials in range.
template <typename S>
LossResult<S> softmax_cross_entropy(const Tensor<S>& logits, std::span<const int> labels) {
    if (logits.rank() != 2)
        throw std::invalid_argument("softmax_cross_entropy: logits " + shape_str(logits.shape) +
                                    " are not [B,C]");
    const Index batch = logits.dim(0), classes = logits.dim(1);
    if (batch < 1 || static_cast<Index>(labels.size()) != batch)
        throw std::invalid_argument("softmax_cross_entropy: got " +
                                    std::to_string(labels.size()) + " labels for batch " +
                                    std::to_string(batch));
    for (int y : labels)
        if (y < 0 || y >= classes)
            throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(y) +
                                        " out of range [0," + std::to_string(classes - 1) + "]");

    LossResult<S> out;
    out.logit_grad = Tensor<S>::zeros({batch, classes});
    auto probs = out.logit_grad.mat();
    auto in = logits.mat();
    S total = S(0);
    for (Index b = 0; b < batch; ++b) {
        const S row_max = in.row(b).maxCoeff();
        probs.row(b) = (in.row(b).array() - row_max).exp();
        const S denom = probs.row(b).sum();
        probs.row(b) /= denom;
        // -log p[label], computed from the shifted logits for accuracy
        total += std::log(denom) - (in(b, labels[static_cast<std::size_t>(b)]) - row_max);
    }
    out.loss = total / static_cast<S>(batch);
    const S inv_batch = S(1) / static_cast<S>(batch);
    for (Index b = 0; b < batch; ++b)
        probs(b, labels[static_cast<std::size_t>(b)]) -= S(1);
    out.logit_grad.data *= inv_batch;
    return out;
}

}  // namespace ifl
