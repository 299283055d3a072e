#pragma once

#include "ifl/data/dataset.hpp"
#include "ifl/protocols/types.hpp"

namespace ifl::proto {

// One federated split-learning round. Each client runs a single update on a
// fresh batch: it uploads cut-layer activations plus labels, the server
// computes the loss on its own copy of the shared part, returns the
// cut-layer gradient (tracked as downlink), and both sides take one SGD
// step. Every per-client server update starts from the same round-start
// parameters; afterwards the server part becomes their uniform average.
// Client-side steps use cfg.lr_base, server-side steps cfg.lr_modular.
RoundMetrics fsl_round(std::vector<ClientState>& clients, Block<float>& server,
                       const data::Dataset& train, const TrainingConfig& cfg,
                       const PayloadCosting& costing, int threads);

}  // namespace ifl::proto
