#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ifl::run {

struct CompareConfig {
    std::vector<std::filesystem::path> inputs;  // experiment out-dirs with rounds.csv
    std::filesystem::path out_dir;
    std::vector<double> thresholds{0.6, 0.7, 0.8};
};

struct CompareRow {
    std::string protocol;
    int round{0};
    int n_runs{0};
    double mean_accuracy{0};
    double sd_accuracy{0};
    double mean_uplink_mb{0};
    double mean_downlink_mb{0};
};

struct ThresholdRow {
    std::string protocol;
    double threshold{0};
    int n_runs{0};
    int n_reached{0};
    double mean_uplink_mb{0};  // NaN when no run reached the threshold
};

struct CompareReport {
    std::vector<CompareRow> curves;
    std::vector<ThresholdRow> thresholds;
};

// Merges rounds.csv files from several experiment directories into accuracy
// curves (mean and spread across runs) and a cost-to-accuracy table: the mean
// cumulative uplink when each run first reports the threshold accuracy.
// Writes compare.csv and thresholds.csv under cfg.out_dir.
CompareReport run_compare(const CompareConfig& cfg);

}  // namespace ifl::run
