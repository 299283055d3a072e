#include "ifl/protocols/ifl.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "ifl/errors.hpp"
#include "ifl/loss.hpp"
#include "ifl/optimizer.hpp"
#include "ifl/parallel.hpp"

namespace ifl::proto {
namespace {

void check_finite(float loss, const char* phase, int client_id, int step) {
    if (!std::isfinite(loss))
        throw DivergenceError(std::string(phase) + ": non-finite loss at client " +
                              std::to_string(client_id) + ", step " + std::to_string(step));
}

}  // namespace

int ifl_base_phase(ClientState& client, const data::Dataset& train, const TrainingConfig& cfg) {
    const OptimizerConfig<float> opt{cfg.lr_base};
    std::vector<Tensor<float>> summed;
    int applied = 0;
    for (int s = 0; s < cfg.local_steps; ++s) {
        auto [x, y] = data::next_batch(client.sampler, train);
        const auto z = forward(client.model.base, x);
        const auto logits = forward(client.model.modular, z);
        const auto loss = softmax_cross_entropy(logits, std::span<const int>(y));
        check_finite(loss.loss, "ifl base phase", client.id, s);
        const auto head = backward(client.model.modular, loss.logit_grad);
        const auto grads = backward(client.model.base, head.input);
        if (cfg.summed_update) {
            accumulate(summed, grads.params);
        } else {
            sgd_step(client.model.base, grads.params, opt);
            ++applied;
        }
    }
    if (cfg.summed_update && !summed.empty()) {
        sgd_step(client.model.base, summed, opt);
        applied = 1;
    }
    return applied;
}

FusionBatch ifl_fusion_upload(ClientState& client, const data::Dataset& train) {
    auto [x, y] = data::next_batch(client.sampler, train);
    const auto& base = std::as_const(client.model.base);
    return FusionBatch{client.id, forward(base, x), std::move(y)};
}

ServerBroadcast server_concat(std::vector<FusionBatch> batches, int n_clients) {
    if (n_clients <= 0) throw std::invalid_argument("server_concat: n_clients must be positive");
    if (std::ssize(batches) != n_clients)
        throw std::invalid_argument("server_concat: got " + std::to_string(batches.size()) +
                                    " batches for " + std::to_string(n_clients) + " clients");
    std::sort(batches.begin(), batches.end(),
              [](const FusionBatch& a, const FusionBatch& b) { return a.client_id < b.client_id; });
    for (int i = 0; i < n_clients; ++i) {
        if (batches[static_cast<std::size_t>(i)].client_id != i + 1)
            throw std::invalid_argument("server_concat: client ids must cover 1.." +
                                        std::to_string(n_clients) +
                                        " exactly once (missing or duplicate id)");
    }
    ServerBroadcast bc;
    bc.client_ids.reserve(batches.size());
    bc.z.reserve(batches.size());
    bc.y.reserve(batches.size());
    for (auto& b : batches) {
        bc.client_ids.push_back(b.client_id);
        bc.z.push_back(std::move(b.z));
        bc.y.push_back(std::move(b.y));
    }
    return bc;
}

int ifl_modular_phase(ClientState& client, const ServerBroadcast& bc, const TrainingConfig& cfg) {
    const OptimizerConfig<float> opt{cfg.lr_modular};
    std::vector<Tensor<float>> summed;
    int applied = 0;
    for (std::size_t i = 0; i < bc.size(); ++i) {
        const auto logits = forward(client.model.modular, bc.z[i]);
        const auto loss = softmax_cross_entropy(logits, std::span<const int>(bc.y[i]));
        check_finite(loss.loss, "ifl modular phase", client.id, static_cast<int>(i));
        const auto grads = backward(client.model.modular, loss.logit_grad);
        if (cfg.summed_update) {
            accumulate(summed, grads.params);
        } else {
            sgd_step(client.model.modular, grads.params, opt);
            ++applied;
        }
    }
    if (cfg.summed_update && !summed.empty()) {
        sgd_step(client.model.modular, summed, opt);
        applied = 1;
    }
    return applied;
}

RoundMetrics ifl_round(std::vector<ClientState>& clients, const data::Dataset& train,
                       const TrainingConfig& cfg, const PayloadCosting& costing, int threads) {
    if (clients.empty()) throw std::invalid_argument("ifl_round: no clients");
    RoundMetrics m;
    std::vector<int> base_steps(clients.size(), 0);
    parallel_for(clients.size(), threads,
                 [&](std::size_t k) { base_steps[k] = ifl_base_phase(clients[k], train, cfg); });

    std::vector<FusionBatch> uploads(clients.size());
    parallel_for(clients.size(), threads,
                 [&](std::size_t k) { uploads[k] = ifl_fusion_upload(clients[k], train); });
    for (const auto& u : uploads) m.uplink_bytes += payload_bytes(u, costing);

    const auto bc = server_concat(std::move(uploads), static_cast<int>(clients.size()));
    m.downlink_bytes += static_cast<std::uint64_t>(clients.size()) * payload_bytes(bc, costing);

    std::vector<int> mod_steps(clients.size(), 0);
    parallel_for(clients.size(), threads,
                 [&](std::size_t k) { mod_steps[k] = ifl_modular_phase(clients[k], bc, cfg); });

    for (std::size_t k = 0; k < clients.size(); ++k) {
        m.base_steps += base_steps[k];
        m.modular_steps += mod_steps[k];
    }
    return m;
}

}  // namespace ifl::proto
