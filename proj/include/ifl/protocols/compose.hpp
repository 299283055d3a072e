#pragma once

#include <vector>

#include "ifl/models/model_spec.hpp"

namespace ifl::proto {

// Row-wise argmax; ties resolve to the lowest class index.
std::vector<int> predictions(const Tensor<float>& logits);

// Runs any base block into any modular block. The fusion contract makes
// this legal across clients; a dimension mismatch surfaces as the usual
// layer shape error.
Tensor<float> compose_logits(const Block<float>& base, const Block<float>& modular,
                             const Tensor<float>& x);

std::vector<int> compose_predict(const Block<float>& base, const Block<float>& modular,
                                 const Tensor<float>& x);

}  // namespace ifl::proto
