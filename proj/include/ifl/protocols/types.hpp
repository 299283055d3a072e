#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ifl/data/sampler.hpp"
#include "ifl/models/model_spec.hpp"

namespace ifl::proto {

enum class Protocol { ifl, fl1, fl2, fsl };

inline const char* to_string(Protocol p) {
    switch (p) {
        case Protocol::ifl: return "ifl";
        case Protocol::fl1: return "fl1";
        case Protocol::fl2: return "fl2";
        case Protocol::fsl: return "fsl";
    }
    throw std::invalid_argument("unknown protocol");
}

inline Protocol protocol_from_string(std::string_view s) {
    if (s == "ifl") return Protocol::ifl;
    if (s == "fl1") return Protocol::fl1;
    if (s == "fl2") return Protocol::fl2;
    if (s == "fsl") return Protocol::fsl;
    throw std::invalid_argument("unknown protocol: " + std::string(s));
}

struct TrainingConfig {
    int n_clients{4};
    int local_steps{10};   // tau: base-block steps per round
    int rounds{200};
    int batch_size{32};
    float lr_base{0.01f};
    float lr_modular{0.01f};
    float lr_fl{0.01f};
    double alpha{0.5};     // Dirichlet concentration for the data split
    // Ablation: apply the per-phase updates as one step on the summed
    // gradient (evaluated at round-start parameters) instead of sequential
    // SGD steps.
    bool summed_update{false};
};

// Wire-size assumptions behind the byte ledger: float32 activations, one
// byte per class label. Configurable because they scale the overhead axis.
struct PayloadCosting {
    int float_bytes{4};
    int label_bytes{1};
};

// One client's upload: fusion-layer outputs plus labels. Together with
// ServerBroadcast this is the only cross-party payload; raw inputs and
// parameters never appear in it.
struct FusionBatch {
    int client_id{0};
    Tensor<float> z;         // [B, fusion_dim]
    std::vector<int> y;      // length B
};

// Concatenated uploads, ordered by ascending client id.
struct ServerBroadcast {
    std::vector<int> client_ids;
    std::vector<Tensor<float>> z;
    std::vector<std::vector<int>> y;

    std::size_t size() const { return client_ids.size(); }
};

inline std::uint64_t payload_bytes(const FusionBatch& b, const PayloadCosting& c = {}) {
    return static_cast<std::uint64_t>(b.z.numel()) * static_cast<std::uint64_t>(c.float_bytes) +
           b.y.size() * static_cast<std::uint64_t>(c.label_bytes);
}

inline std::uint64_t payload_bytes(const ServerBroadcast& bc, const PayloadCosting& c = {}) {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < bc.size(); ++i)
        total += static_cast<std::uint64_t>(bc.z[i].numel()) *
                     static_cast<std::uint64_t>(c.float_bytes) +
                 bc.y[i].size() * static_cast<std::uint64_t>(c.label_bytes);
    return total;
}

// One client's full simulation state. Single-owner; per-client work may run
// on parallel threads because states share nothing mutable.
struct ClientState {
    int id{0};
    models::ClientModel model;
    data::BatchSampler sampler;
};

struct RoundMetrics {
    std::uint64_t uplink_bytes{0};
    std::uint64_t downlink_bytes{0};
    int base_steps{0};      // SGD applications on base / client-side / full models
    int modular_steps{0};   // SGD applications on modular blocks / server part
};

}  // namespace ifl::proto
