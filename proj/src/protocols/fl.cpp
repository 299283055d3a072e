#include "ifl/protocols/fl.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ifl/errors.hpp"
#include "ifl/loss.hpp"
#include "ifl/optimizer.hpp"
#include "ifl/parallel.hpp"

namespace ifl::proto {
namespace {

std::uint64_t model_param_bytes(const models::ClientModel& m, const PayloadCosting& c) {
    const Index n = param_count(m.base) + param_count(m.modular);
    return static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(c.float_bytes);
}

void local_steps(ClientState& client, const data::Dataset& train, const TrainingConfig& cfg) {
    const OptimizerConfig<float> opt{cfg.lr_fl};
    for (int s = 0; s < cfg.local_steps; ++s) {
        auto [x, y] = data::next_batch(client.sampler, train);
        const auto z = forward(client.model.base, x);
        const auto logits = forward(client.model.modular, z);
        const auto loss = softmax_cross_entropy(logits, std::span<const int>(y));
        if (!std::isfinite(loss.loss))
            throw DivergenceError("fl local step: non-finite loss at client " +
                                  std::to_string(client.id) + ", step " + std::to_string(s));
        const auto head = backward(client.model.modular, loss.logit_grad);
        const auto grads = backward(client.model.base, head.input);
        sgd_step(client.model.modular, head.params, opt);
        sgd_step(client.model.base, grads.params, opt);
    }
}

// dst <- sum_k w[k] * src[k], accumulated in double in client order so the
// result does not depend on scheduling.
void weighted_average(Block<float>& dst, const std::vector<const Block<float>*>& srcs,
                      const std::vector<double>& w) {
    std::vector<Tensor<float>*> out;
    for_each_param(dst, [&](Tensor<float>& t) { out.push_back(&t); });
    std::vector<Eigen::ArrayXd> acc(out.size());
    for (std::size_t p = 0; p < out.size(); ++p) acc[p] = Eigen::ArrayXd::Zero(out[p]->numel());
    for (std::size_t k = 0; k < srcs.size(); ++k) {
        std::size_t p = 0;
        for_each_param(*srcs[k], [&](const Tensor<float>& t) {
            acc[p] += w[k] * t.data.cast<double>();
            ++p;
        });
    }
    for (std::size_t p = 0; p < out.size(); ++p) out[p]->data = acc[p].cast<float>();
}

}  // namespace

bool same_architecture(const Block<float>& a, const Block<float>& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        if (!(spec_of(a.layers[i]) == spec_of(b.layers[i]))) return false;
    return true;
}

bool same_architecture(const models::ClientModel& a, const models::ClientModel& b) {
    return same_architecture(a.base, b.base) && same_architecture(a.modular, b.modular);
}

RoundMetrics fl_round(std::vector<ClientState>& clients, models::ClientModel& global,
                      const data::Dataset& train, const TrainingConfig& cfg,
                      const PayloadCosting& costing, int threads) {
    if (clients.empty()) throw std::invalid_argument("fl_round: no clients");
    for (const auto& c : clients)
        if (!same_architecture(c.model, global))
            throw std::invalid_argument("fl_round: heterogeneous client architectures; "
                                        "FedAvg requires a common model");

    RoundMetrics m;
    const std::uint64_t pbytes = model_param_bytes(global, costing);
    for (auto& c : clients) {
        copy_params(c.model.base, global.base);
        copy_params(c.model.modular, global.modular);
    }
    m.downlink_bytes += pbytes * clients.size();

    parallel_for(clients.size(), threads,
                 [&](std::size_t k) { local_steps(clients[k], train, cfg); });
    m.base_steps = cfg.local_steps * static_cast<int>(clients.size());
    m.uplink_bytes += pbytes * clients.size();

    double total = 0;
    for (const auto& c : clients) total += static_cast<double>(c.sampler.shard_size());
    if (total <= 0) throw std::invalid_argument("fl_round: empty shards");
    std::vector<double> w;
    w.reserve(clients.size());
    for (const auto& c : clients) w.push_back(static_cast<double>(c.sampler.shard_size()) / total);

    std::vector<const Block<float>*> bases, mods;
    for (const auto& c : clients) {
        bases.push_back(&c.model.base);
        mods.push_back(&c.model.modular);
    }
    weighted_average(global.base, bases, w);
    weighted_average(global.modular, mods, w);
    return m;
}

}  // namespace ifl::proto
