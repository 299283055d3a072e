#include "ifl/protocols/compose.hpp"

#include <stdexcept>

namespace ifl::proto {

std::vector<int> predictions(const Tensor<float>& logits) {
    if (logits.rank() != 2) throw std::invalid_argument("predictions: logits must be [B, C]");
    const auto m = logits.mat(logits.dim(0), logits.dim(1));
    std::vector<int> out(static_cast<std::size_t>(logits.dim(0)));
    for (Index b = 0; b < logits.dim(0); ++b) {
        Index best = 0;
        for (Index c = 1; c < logits.dim(1); ++c)
            if (m(b, c) > m(b, best)) best = c;
        out[static_cast<std::size_t>(b)] = static_cast<int>(best);
    }
    return out;
}

Tensor<float> compose_logits(const Block<float>& base, const Block<float>& modular,
                             const Tensor<float>& x) {
    return forward(modular, forward(base, x));
}

std::vector<int> compose_predict(const Block<float>& base, const Block<float>& modular,
                                 const Tensor<float>& x) {
    return predictions(compose_logits(base, modular, x));
}

}  // namespace ifl::proto
