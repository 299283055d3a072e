#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace ifl::run {

struct ComposeEvalConfig {
    std::filesystem::path checkpoint_dir;  // client_<id>.base.mfw / .modular.mfw pairs
    std::filesystem::path data_dir;
    bool synthetic{false};
    int synthetic_test{2000};
    int test_limit{0};
    std::uint64_t seed{1};  // synthetic test-set stream
    std::filesystem::path out_dir;
    int threads{1};
};

struct ComposeEvalResult {
    std::vector<int> client_ids;  // ascending
    Eigen::MatrixXd matrix;       // acc(i, j): base of ids[i] with modular of ids[j]
    std::vector<double> sd_pp;    // per base; empty when only one modular exists
};

// Loads every checkpoint pair from a finished run, probes that the blocks
// still satisfy the fusion contract, and evaluates the full composition
// matrix on the test set. Writes composition.csv (and sd.csv when there is
// more than one modular block) under cfg.out_dir.
ComposeEvalResult run_compose_eval(const ComposeEvalConfig& cfg);

}  // namespace ifl::run
