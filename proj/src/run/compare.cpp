#include "ifl/run/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include "ifl/errors.hpp"
#include "ifl/metrics/csv.hpp"

namespace ifl::run {
namespace {

struct SeriesPoint {
    int round;
    double accuracy;
    double uplink_mb;
    double downlink_mb;
};

}  // namespace

CompareReport run_compare(const CompareConfig& cfg) {
    if (cfg.inputs.empty()) throw ConfigError("compare: no input directories");
    if (cfg.out_dir.empty()) throw ConfigError("compare: out_dir must be set");
    if (cfg.thresholds.empty()) throw ConfigError("compare: no thresholds");
    for (double t : cfg.thresholds)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("compare: thresholds must be in (0,1)");

    // (protocol, input index, run id) -> eval points in round order
    std::map<std::tuple<std::string, std::size_t, int>, std::vector<SeriesPoint>> series;
    for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
        const auto t = metrics::read_csv(cfg.inputs[i] / "rounds.csv");
        const auto c_run = t.col("run_id");
        const auto c_proto = t.col("protocol");
        const auto c_round = t.col("round");
        const auto c_up = t.col("cumulative_uplink_mb");
        const auto c_down = t.col("cumulative_downlink_mb");
        const auto c_acc = t.col("mean_accuracy");
        for (const auto& row : t.rows) {
            auto& s = series[{row[c_proto], i, std::stoi(row[c_run])}];
            s.push_back(SeriesPoint{std::stoi(row[c_round]), std::stod(row[c_acc]),
                                    std::stod(row[c_up]), std::stod(row[c_down])});
        }
    }
    if (series.empty()) throw DataError("compare: inputs contain no rounds");
    for (auto& [key, pts] : series)
        std::sort(pts.begin(), pts.end(),
                  [](const SeriesPoint& a, const SeriesPoint& b) { return a.round < b.round; });

    CompareReport report;

    // Curves: pool every series of a protocol round by round.
    std::map<std::pair<std::string, int>, std::vector<SeriesPoint>> by_round;
    for (const auto& [key, pts] : series)
        for (const auto& p : pts) by_round[{std::get<0>(key), p.round}].push_back(p);
    for (const auto& [key, pts] : by_round) {
        CompareRow row;
        row.protocol = key.first;
        row.round = key.second;
        row.n_runs = static_cast<int>(pts.size());
        double acc = 0, up = 0, down = 0;
        for (const auto& p : pts) {
            acc += p.accuracy;
            up += p.uplink_mb;
            down += p.downlink_mb;
        }
        const double n = static_cast<double>(pts.size());
        row.mean_accuracy = acc / n;
        row.mean_uplink_mb = up / n;
        row.mean_downlink_mb = down / n;
        double var = 0;
        for (const auto& p : pts) var += (p.accuracy - row.mean_accuracy) *
                                         (p.accuracy - row.mean_accuracy);
        row.sd_accuracy = std::sqrt(var / n);
        report.curves.push_back(std::move(row));
    }

    // Cost to reach each threshold: first eval point at or above it, per run.
    std::map<std::string, std::vector<const std::vector<SeriesPoint>*>> by_protocol;
    for (const auto& [key, pts] : series) by_protocol[std::get<0>(key)].push_back(&pts);
    for (const auto& [protocol, runs] : by_protocol) {
        for (double th : cfg.thresholds) {
            ThresholdRow row;
            row.protocol = protocol;
            row.threshold = th;
            row.n_runs = static_cast<int>(runs.size());
            double sum = 0;
            for (const auto* pts : runs) {
                const auto it = std::find_if(pts->begin(), pts->end(),
                                             [&](const SeriesPoint& p) { return p.accuracy >= th; });
                if (it == pts->end()) continue;
                sum += it->uplink_mb;
                ++row.n_reached;
            }
            row.mean_uplink_mb = row.n_reached > 0
                                     ? sum / static_cast<double>(row.n_reached)
                                     : std::numeric_limits<double>::quiet_NaN();
            report.thresholds.push_back(std::move(row));
        }
    }

    std::filesystem::create_directories(cfg.out_dir);
    metrics::CsvWriter curves(cfg.out_dir / "compare.csv",
                              {"protocol", "round", "n_runs", "mean_accuracy", "sd_accuracy",
                               "mean_uplink_mb", "mean_downlink_mb"});
    for (const auto& r : report.curves)
        curves.write_row({r.protocol, std::to_string(r.round), std::to_string(r.n_runs),
                          metrics::format_double(r.mean_accuracy),
                          metrics::format_double(r.sd_accuracy),
                          metrics::format_double(r.mean_uplink_mb),
                          metrics::format_double(r.mean_downlink_mb)});
    metrics::CsvWriter ths(cfg.out_dir / "thresholds.csv",
                           {"protocol", "threshold", "n_runs", "n_reached",
                            "mean_uplink_mb_at_threshold"});
    for (const auto& r : report.thresholds)
        ths.write_row({r.protocol, metrics::format_double(r.threshold),
                       std::to_string(r.n_runs), std::to_string(r.n_reached),
                       r.n_reached > 0 ? metrics::format_double(r.mean_uplink_mb)
                                       : std::string{}});
    return report;
}

}  // namespace ifl::run
