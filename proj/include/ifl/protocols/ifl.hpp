#pragma once

#include "ifl/data/dataset.hpp"
#include "ifl/protocols/types.hpp"

namespace ifl::proto {

// Phase 1 of a round: tau SGD steps on the base block only. The modular
// block participates in every forward/backward pass but its parameters are
// not touched. Returns the number of SGD applications (tau, or one when
// cfg.summed_update collapses them).
int ifl_base_phase(ClientState& client, const data::Dataset& train, const TrainingConfig& cfg);

// Phase 2: the client draws a fresh batch and uploads its fusion-layer
// outputs plus labels.
FusionBatch ifl_fusion_upload(ClientState& client, const data::Dataset& train);

// Server-side concat. Expects exactly one batch per client id in 1..n_clients
// (any arrival order); output is ordered by ascending client id.
ServerBroadcast server_concat(std::vector<FusionBatch> batches, int n_clients);

// Phase 3: one SGD step on the modular block per broadcast entry, taken in
// ascending client-id order. Uploaded activations are constants here; no
// gradient flows back across the fusion boundary. Returns SGD applications.
int ifl_modular_phase(ClientState& client, const ServerBroadcast& bc, const TrainingConfig& cfg);

// One full IFL round over all clients: base phase, upload, concat,
// broadcast, modular phase. Byte counts are measured from the payload
// objects actually exchanged. `threads` only controls scheduling; results
// are identical for any value.
RoundMetrics ifl_round(std::vector<ClientState>& clients, const data::Dataset& train,
                       const TrainingConfig& cfg, const PayloadCosting& costing, int threads);

}  // namespace ifl::proto
