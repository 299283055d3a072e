#include "ifl/run/compose_eval.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

#include "ifl/data/synthetic.hpp"
#include "ifl/errors.hpp"
#include "ifl/metrics/csv.hpp"
#include "ifl/metrics/eval.hpp"
#include "ifl/seed.hpp"
#include "ifl/serialize.hpp"

namespace ifl::run {
namespace {

namespace fs = std::filesystem;

std::map<int, std::pair<fs::path, fs::path>> find_pairs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::map<int, fs::path> bases, mods;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        const std::string prefix = "client_";
        if (name.rfind(prefix, 0) != 0) continue;
        const auto parse_id = [&](const std::string& suffix) -> int {
            if (name.size() <= prefix.size() + suffix.size() ||
                name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
                return -1;
            const std::string digits =
                name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
            if (digits.empty() ||
                digits.find_first_not_of("0123456789") != std::string::npos)
                return -1;
            return std::stoi(digits);
        };
        if (const int id = parse_id(".base.mfw"); id >= 0) bases[id] = entry.path();
        if (const int id = parse_id(".modular.mfw"); id >= 0) mods[id] = entry.path();
    }
    std::map<int, std::pair<fs::path, fs::path>> pairs;
    for (const auto& [id, p] : bases)
        if (auto it = mods.find(id); it != mods.end()) pairs[id] = {p, it->second};
    if (pairs.empty())
        throw DataError("no client_<id>.base.mfw / .modular.mfw pairs in " + dir.string());
    return pairs;
}

}  // namespace

ComposeEvalResult run_compose_eval(const ComposeEvalConfig& cfg) {
    if (!cfg.synthetic && cfg.data_dir.empty())
        throw ConfigError("either --synthetic or --data-dir is required");
    if (cfg.out_dir.empty()) throw ConfigError("out_dir must be set");
    if (cfg.threads < 1) throw ConfigError("threads must be at least 1");

    data::Dataset test = cfg.synthetic
                             ? data::make_synthetic(cfg.synthetic_test,
                                                    derive_seed(cfg.seed, {stream::synthetic_test}))
                             : data::load_split(cfg.data_dir, /*train=*/false);
    test = data::take_prefix(test, cfg.test_limit);
    data::validate(test);

    ComposeEvalResult res;
    std::vector<Block<float>> bases, mods;
    for (const auto& [id, paths] : find_pairs(cfg.checkpoint_dir)) {
        res.client_ids.push_back(id);
        bases.push_back(load_block(paths.first));
        mods.push_back(load_block(paths.second));
    }

    // Contract probe on one real sample: every base must emit the same
    // flattened width and every modular block must map it to class scores.
    Tensor<float> probe;
    std::vector<int> probe_y;
    const std::vector<int> first{0};
    data::gather(test, first, probe, probe_y);
    Index fusion_dim = -1;
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const auto z = forward(std::as_const(bases[i]), probe);
        if (z.rank() != 2)
            throw ConfigError("client " + std::to_string(res.client_ids[i]) +
                              ": base does not end in a flattened fusion layer");
        if (fusion_dim < 0) fusion_dim = z.dim(1);
        if (z.dim(1) != fusion_dim)
            throw ConfigError("client " + std::to_string(res.client_ids[i]) +
                              ": fusion width " + std::to_string(z.dim(1)) +
                              " differs from " + std::to_string(fusion_dim));
    }
    const Tensor<float> zprobe = Tensor<float>::zeros({1, fusion_dim});
    for (std::size_t j = 0; j < mods.size(); ++j) {
        Tensor<float> logits;
        try {
            logits = forward(std::as_const(mods[j]), zprobe);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("client " + std::to_string(res.client_ids[j]) +
                              ": modular block rejects fusion width " +
                              std::to_string(fusion_dim) + " (" + e.what() + ")");
        }
        if (logits.rank() != 2 || logits.dim(1) != data::kNumClasses)
            throw ConfigError("client " + std::to_string(res.client_ids[j]) +
                              ": modular block does not emit 10 class scores");
    }

    std::vector<const Block<float>*> bp, mp;
    for (const auto& b : bases) bp.push_back(&b);
    for (const auto& m : mods) mp.push_back(&m);
    res.matrix = metrics::composition_matrix(bp, mp, test, cfg.threads);
    if (res.matrix.cols() >= 2) res.sd_pp = metrics::composition_sd_pp(res.matrix);

    fs::create_directories(cfg.out_dir);
    metrics::CsvWriter comp(cfg.out_dir / "composition.csv",
                            {"run_id", "round", "base_id", "modular_id", "accuracy"});
    for (Eigen::Index i = 0; i < res.matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < res.matrix.cols(); ++j)
            comp.write_row({"0", "0",
                            std::to_string(res.client_ids[static_cast<std::size_t>(i)]),
                            std::to_string(res.client_ids[static_cast<std::size_t>(j)]),
                            metrics::format_double(res.matrix(i, j))});
    if (!res.sd_pp.empty()) {
        metrics::CsvWriter sd(cfg.out_dir / "sd.csv", {"run_id", "round", "base_id", "sd_pp"});
        for (std::size_t i = 0; i < res.sd_pp.size(); ++i)
            sd.write_row({"0", "0", std::to_string(res.client_ids[i]),
                          metrics::format_double(res.sd_pp[i])});
    }
    return res;
}

}  // namespace ifl::run
