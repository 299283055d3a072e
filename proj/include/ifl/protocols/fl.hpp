#pragma once

#include "ifl/data/dataset.hpp"
#include "ifl/protocols/types.hpp"

namespace ifl::proto {

// True if the two blocks have identical layer stacks (kinds and dims).
bool same_architecture(const Block<float>& a, const Block<float>& b);
bool same_architecture(const models::ClientModel& a, const models::ClientModel& b);

// One FedAvg round: broadcast the global parameters, run tau full-model SGD
// steps per client, then replace the global model with the shard-size
// weighted average of the client results. All clients must share the global
// architecture; FedAvg has no answer for heterogeneous ones.
RoundMetrics fl_round(std::vector<ClientState>& clients, models::ClientModel& global,
                      const data::Dataset& train, const TrainingConfig& cfg,
                      const PayloadCosting& costing, int threads);

}  // namespace ifl::proto
