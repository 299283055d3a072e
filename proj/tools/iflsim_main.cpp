#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "ifl/errors.hpp"
#include "ifl/protocols/types.hpp"
#include "ifl/run/compare.hpp"
#include "ifl/run/compose_eval.hpp"
#include "ifl/run/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

// Seeds a config from the same JSON shape the runner echoes back as
// config.resolved.json, so a previous run can be replayed verbatim.
ifl::run::ExperimentConfig config_from_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ifl::DataError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ifl::ConfigError("bad config JSON in " + path.string() + ": " + e.what());
    }
    ifl::run::ExperimentConfig cfg;
    try {
        static const std::set<std::string> known{
            "protocol",     "n_clients",   "rounds",          "local_steps",
            "batch_size",   "alpha",       "lr_base",         "lr_modular",
            "seed",         "mc_runs",     "data_dir",        "synthetic",
            "synthetic_train", "synthetic_test", "synthetic_label_noise",
            "train_limit",  "test_limit",
            "eval_every",   "threads",     "summed_update",   "float_bytes",
            "label_bytes",  "bytes_per_mb", "out_dir",        "model_spec_path",
            "save_checkpoints"};
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (!known.count(key))
                throw ifl::ConfigError("unknown config key in " + path.string() + ": " + key);
        }
        if (j.contains("protocol"))
            cfg.protocol = ifl::proto::protocol_from_string(j["protocol"].get<std::string>());
        if (j.contains("n_clients")) cfg.n_clients = j["n_clients"].get<int>();
        if (j.contains("rounds")) cfg.rounds = j["rounds"].get<int>();
        if (j.contains("local_steps")) cfg.local_steps = j["local_steps"].get<int>();
        if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
        if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
        if (j.contains("lr_base")) cfg.lr_base = j["lr_base"].get<float>();
        if (j.contains("lr_modular")) cfg.lr_modular = j["lr_modular"].get<float>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("mc_runs")) cfg.mc_runs = j["mc_runs"].get<int>();
        if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
        if (j.contains("synthetic")) cfg.synthetic = j["synthetic"].get<bool>();
        if (j.contains("synthetic_train")) cfg.synthetic_train = j["synthetic_train"].get<int>();
        if (j.contains("synthetic_test")) cfg.synthetic_test = j["synthetic_test"].get<int>();
        if (j.contains("synthetic_label_noise"))
            cfg.synthetic_label_noise = j["synthetic_label_noise"].get<double>();
        if (j.contains("train_limit")) cfg.train_limit = j["train_limit"].get<int>();
        if (j.contains("test_limit")) cfg.test_limit = j["test_limit"].get<int>();
        if (j.contains("eval_every")) cfg.eval_every = j["eval_every"].get<int>();
        if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
        if (j.contains("summed_update")) cfg.summed_update = j["summed_update"].get<bool>();
        if (j.contains("float_bytes")) cfg.costing.float_bytes = j["float_bytes"].get<int>();
        if (j.contains("label_bytes")) cfg.costing.label_bytes = j["label_bytes"].get<int>();
        if (j.contains("bytes_per_mb")) cfg.bytes_per_mb = j["bytes_per_mb"].get<double>();
        if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("model_spec_path"))
            cfg.model_spec_path = j["model_spec_path"].get<std::string>();
        if (j.contains("save_checkpoints"))
            cfg.save_checkpoints = j["save_checkpoints"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ifl::ConfigError("bad config value in " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ifl::ConfigError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

std::filesystem::path prescan_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string_view(argv[i]) == "--config") return argv[i + 1];
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iflsim: split-model federated training with exact communication accounting"};
    app.require_subcommand(1);

    ifl::run::ExperimentConfig cfg;
    try {
        if (const auto path = prescan_config(argc, argv); !path.empty())
            cfg = config_from_json(path);
    } catch (const ifl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ifl::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }

    auto* run = app.add_subcommand("run", "Train one protocol and write metrics CSVs");
    std::string protocol = ifl::proto::to_string(cfg.protocol);
    std::string config_path;  // consumed by the prescan; declared so CLI11 accepts it
    run->add_option("--config", config_path, "JSON config (flags override its values)");
    run->add_option("--protocol", protocol, "ifl | fl1 | fl2 | fsl")
        ->check(CLI::IsMember({"ifl", "fl1", "fl2", "fsl"}));
    run->add_option("--clients", cfg.n_clients, "number of clients");
    run->add_option("--rounds", cfg.rounds, "training rounds");
    run->add_option("--local-steps", cfg.local_steps, "base-phase SGD steps per round (tau)");
    run->add_option("--batch-size", cfg.batch_size, "mini-batch size");
    run->add_option("--alpha", cfg.alpha, "Dirichlet concentration of the split");
    run->add_option("--lr-base", cfg.lr_base, "learning rate, base blocks");
    run->add_option("--lr-modular", cfg.lr_modular, "learning rate, modular / server blocks");
    run->add_option("--seed", cfg.seed, "master seed");
    run->add_option("--mc-runs", cfg.mc_runs, "independent repetitions");
    run->add_option("--data-dir", cfg.data_dir, "directory with IDX train/test files");
    run->add_flag("--synthetic", cfg.synthetic, "use the built-in synthetic dataset");
    run->add_option("--synthetic-train", cfg.synthetic_train, "synthetic training samples");
    run->add_option("--synthetic-test", cfg.synthetic_test, "synthetic test samples");
    run->add_option("--synthetic-label-noise", cfg.synthetic_label_noise,
                    "fraction of flipped training labels");
    run->add_option("--train-limit", cfg.train_limit, "cap on training samples (<=0: all)");
    run->add_option("--test-limit", cfg.test_limit, "cap on test samples (<=0: all)");
    run->add_option("--eval-every", cfg.eval_every, "evaluation cadence in rounds");
    run->add_option("--threads", cfg.threads, "worker threads (never changes results)");
    run->add_flag("--summed-update", cfg.summed_update,
                  "single step on the summed gradient per phase");
    run->add_option("--models", cfg.model_spec_path, "JSON model specs (default: built-ins)");
    run->add_option("--float-bytes", cfg.costing.float_bytes, "wire bytes per float");
    run->add_option("--label-bytes", cfg.costing.label_bytes, "wire bytes per label");
    run->add_option("--bytes-per-mb", cfg.bytes_per_mb, "MB divisor (1e6 or 1048576)");
    run->add_option("--out", cfg.out_dir, "output directory");
    bool no_checkpoints = false;
    run->add_flag("--no-checkpoints", no_checkpoints, "skip saving model checkpoints");

    auto* cmp = app.add_subcommand("compare", "Merge finished runs into curves and costs");
    ifl::run::CompareConfig ccfg;
    std::vector<double> thresholds;
    cmp->add_option("inputs", ccfg.inputs, "experiment output directories")->required();
    cmp->add_option("--out", ccfg.out_dir, "output directory")->required();
    cmp->add_option("--thresholds", thresholds, "accuracy thresholds (default 0.6 0.7 0.8)");

    auto* ce = app.add_subcommand("compose-eval",
                                  "Cross-compose saved base/modular checkpoints");
    ifl::run::ComposeEvalConfig ecfg;
    ce->add_option("--checkpoints", ecfg.checkpoint_dir, "directory with .mfw pairs")
        ->required();
    ce->add_option("--data-dir", ecfg.data_dir, "directory with IDX test files");
    ce->add_flag("--synthetic", ecfg.synthetic, "use the built-in synthetic test set");
    ce->add_option("--synthetic-test", ecfg.synthetic_test, "synthetic test samples");
    ce->add_option("--test-limit", ecfg.test_limit, "cap on test samples (<=0: all)");
    ce->add_option("--seed", ecfg.seed, "master seed (synthetic test stream)");
    ce->add_option("--threads", ecfg.threads, "worker threads");
    ce->add_option("--out", ecfg.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (app.got_subcommand(run)) {
            cfg.protocol = ifl::proto::protocol_from_string(protocol);
            cfg.save_checkpoints = cfg.save_checkpoints && !no_checkpoints;
            const auto res = ifl::run::run_experiment(cfg);
            std::cout << "wrote " << (cfg.out_dir / "rounds.csv").string() << " ("
                      << res.rounds.size() << " rows)\n";
            if (cfg.protocol == ifl::proto::Protocol::ifl)
                std::cout << "wrote " << (cfg.out_dir / "composition.csv").string() << " and "
                          << (cfg.out_dir / "sd.csv").string() << '\n';
            if (!res.rounds.empty()) {
                const auto& last = res.rounds.back();
                std::printf("final: run %d, round %d, mean accuracy %.4f, uplink %.3f MB\n",
                            last.run_id, last.round, last.mean_accuracy, last.cum_uplink_mb);
            }
        } else if (app.got_subcommand(cmp)) {
            if (!thresholds.empty()) ccfg.thresholds = thresholds;
            const auto report = ifl::run::run_compare(ccfg);
            std::cout << "wrote " << (ccfg.out_dir / "compare.csv").string() << " and "
                      << (ccfg.out_dir / "thresholds.csv").string() << '\n';
            for (const auto& t : report.thresholds) {
                std::printf("%-4s acc>=%.2f: %d/%d runs", t.protocol.c_str(), t.threshold,
                            t.n_reached, t.n_runs);
                if (t.n_reached > 0) std::printf(", mean uplink %.3f MB", t.mean_uplink_mb);
                std::printf("\n");
            }
        } else if (app.got_subcommand(ce)) {
            const auto res = ifl::run::run_compose_eval(ecfg);
            std::cout << "wrote " << (ecfg.out_dir / "composition.csv").string() << '\n';
            for (Eigen::Index i = 0; i < res.matrix.rows(); ++i) {
                for (Eigen::Index j = 0; j < res.matrix.cols(); ++j)
                    std::printf("%s%.4f", j ? " " : "", res.matrix(i, j));
                std::printf("\n");
            }
        }
    } catch (const ifl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ifl::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const ifl::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
