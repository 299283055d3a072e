#pragma once

#include <cstdint>

#include "ifl/protocols/types.hpp"

namespace ifl::metrics {

// Cumulative cross-party traffic. Megabytes default to the decimal
// convention (1 MB = 1e6 bytes); pass 1<<20 for the binary one.
struct CommLedger {
    std::uint64_t uplink_bytes{0};
    std::uint64_t downlink_bytes{0};

    void add(const proto::RoundMetrics& m) {
        uplink_bytes += m.uplink_bytes;
        downlink_bytes += m.downlink_bytes;
    }
};

inline double to_mb(std::uint64_t bytes, double bytes_per_mb = 1e6) {
    return static_cast<double>(bytes) / bytes_per_mb;
}

// Closed forms for the per-round uplink, used to cross-check the measured
// ledgers. IFL and FSL ship activations and labels; FL ships parameters.
inline std::uint64_t activation_uplink_bytes(int n_clients, int batch_size, int fusion_dim,
                                             const proto::PayloadCosting& c = {}) {
    const auto per_client =
        static_cast<std::uint64_t>(batch_size) * static_cast<std::uint64_t>(fusion_dim) *
            static_cast<std::uint64_t>(c.float_bytes) +
        static_cast<std::uint64_t>(batch_size) * static_cast<std::uint64_t>(c.label_bytes);
    return static_cast<std::uint64_t>(n_clients) * per_client;
}

inline std::uint64_t parameter_uplink_bytes(int n_clients, std::uint64_t param_count,
                                            const proto::PayloadCosting& c = {}) {
    return static_cast<std::uint64_t>(n_clients) * param_count *
           static_cast<std::uint64_t>(c.float_bytes);
}

}  // namespace ifl::metrics
