#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ifl/protocols/types.hpp"

namespace ifl::run {

// Everything a training campaign depends on. Defaults are the reference
// setup: 4 clients, 10 base steps per round, batch 32, Dirichlet(0.5) split,
// learning rate 0.01 on both sides.
struct ExperimentConfig {
    proto::Protocol protocol{proto::Protocol::ifl};
    int n_clients{4};
    int rounds{200};
    int local_steps{10};
    int batch_size{32};
    double alpha{0.5};
    float lr_base{0.01f};
    float lr_modular{0.01f};
    std::uint64_t seed{1};
    int mc_runs{10};

    std::filesystem::path data_dir{};  // IDX files; ignored when synthetic
    bool synthetic{false};
    int synthetic_train{8000};
    int synthetic_test{2000};
    double synthetic_label_noise{0.0};  // train-split label flip fraction
    int train_limit{50000};            // <= 0 keeps everything
    int test_limit{0};

    int eval_every{5};
    int threads{1};
    bool summed_update{false};
    proto::PayloadCosting costing{};
    double bytes_per_mb{1e6};

    std::filesystem::path out_dir{"out"};
    std::filesystem::path model_spec_path{};  // empty: stock architectures
    bool save_checkpoints{true};
};

void validate(const ExperimentConfig& cfg);

struct RoundRecord {
    int run_id{0};
    int round{0};
    double cum_uplink_mb{0};
    double cum_downlink_mb{0};
    double mean_accuracy{0};
    std::vector<double> client_accuracy;  // by ascending client id
};

struct CompositionRecord {
    int run_id{0};
    int round{0};
    int base_id{0};
    int modular_id{0};
    double accuracy{0};
};

struct SdRecord {
    int run_id{0};
    int round{0};
    int base_id{0};
    double sd_pp{0};
};

struct ExperimentResult {
    std::vector<RoundRecord> rounds;
    std::vector<CompositionRecord> compositions;  // cross-client pairs (IFL only)
    std::vector<SdRecord> sds;                    // per-base spread (IFL only)
};

// Runs cfg.mc_runs independent repetitions and writes rounds.csv (plus
// composition.csv and sd.csv for IFL), config.resolved.json, and per-run
// checkpoints under cfg.out_dir. The same config always produces the same
// files, byte for byte, regardless of cfg.threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace ifl::run
