#include "ifl/protocols/fsl.hpp"

#include <cmath>
#include <string>

#include "ifl/errors.hpp"
#include "ifl/loss.hpp"
#include "ifl/optimizer.hpp"
#include "ifl/parallel.hpp"

namespace ifl::proto {

RoundMetrics fsl_round(std::vector<ClientState>& clients, Block<float>& server,
                       const data::Dataset& train, const TrainingConfig& cfg,
                       const PayloadCosting& costing, int threads) {
    if (clients.empty()) throw std::invalid_argument("fsl_round: no clients");
    const OptimizerConfig<float> client_opt{cfg.lr_base};
    const OptimizerConfig<float> server_opt{cfg.lr_modular};

    RoundMetrics m;
    std::vector<Block<float>> server_updates(clients.size());
    std::vector<std::uint64_t> up(clients.size(), 0), down(clients.size(), 0);
    parallel_for(clients.size(), threads, [&](std::size_t k) {
        auto& client = clients[k];
        auto [x, y] = data::next_batch(client.sampler, train);
        const auto h = forward(client.model.base, x);
        up[k] = static_cast<std::uint64_t>(h.numel()) *
                    static_cast<std::uint64_t>(costing.float_bytes) +
                y.size() * static_cast<std::uint64_t>(costing.label_bytes);

        Block<float> part = server;  // per-client update starts from round-start params
        const auto logits = forward(part, h);
        const auto loss = softmax_cross_entropy(logits, std::span<const int>(y));
        if (!std::isfinite(loss.loss))
            throw DivergenceError("fsl round: non-finite loss at client " +
                                  std::to_string(client.id));
        const auto sg = backward(part, loss.logit_grad);
        sgd_step(part, sg.params, server_opt);
        server_updates[k] = std::move(part);
        down[k] = static_cast<std::uint64_t>(sg.input.numel()) *
                  static_cast<std::uint64_t>(costing.float_bytes);

        const auto bg = backward(client.model.base, sg.input);
        sgd_step(client.model.base, bg.params, client_opt);
    });

    for (std::size_t k = 0; k < clients.size(); ++k) {
        m.uplink_bytes += up[k];
        m.downlink_bytes += down[k];
    }
    m.base_steps = static_cast<int>(clients.size());
    m.modular_steps = static_cast<int>(clients.size());

    // theta_s <- uniform average of the per-client updates, accumulated in
    // double in client order so scheduling cannot perturb it.
    std::vector<Tensor<float>*> out;
    for_each_param(server, [&](Tensor<float>& t) { out.push_back(&t); });
    std::vector<Eigen::ArrayXd> acc(out.size());
    for (std::size_t p = 0; p < out.size(); ++p) acc[p] = Eigen::ArrayXd::Zero(out[p]->numel());
    const double w = 1.0 / static_cast<double>(clients.size());
    for (std::size_t k = 0; k < clients.size(); ++k) {
        std::size_t p = 0;
        for_each_param(std::as_const(server_updates[k]), [&](const Tensor<float>& t) {
            acc[p] += w * t.data.cast<double>();
            ++p;
        });
    }
    for (std::size_t p = 0; p < out.size(); ++p) out[p]->data = acc[p].cast<float>();
    return m;
}

}  // namespace ifl::proto
