#include "ifl/run/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <string>
#include <utility>

#include "ifl/data/partition.hpp"
#include "ifl/data/synthetic.hpp"
#include "ifl/errors.hpp"
#include "ifl/init.hpp"
#include "ifl/metrics/comm.hpp"
#include "ifl/metrics/csv.hpp"
#include "ifl/metrics/eval.hpp"
#include "ifl/protocols/fl.hpp"
#include "ifl/protocols/fsl.hpp"
#include "ifl/protocols/ifl.hpp"
#include "ifl/seed.hpp"
#include "ifl/serialize.hpp"

namespace ifl::run {
namespace {

namespace fs = std::filesystem;

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

data::Dataset load_train(const ExperimentConfig& cfg) {
    data::Dataset ds =
        cfg.synthetic
            ? data::make_synthetic(cfg.synthetic_train,
                                   derive_seed(cfg.seed, {stream::synthetic_train}),
                                   cfg.synthetic_label_noise)
            : data::load_split(cfg.data_dir, /*train=*/true);
    ds = data::take_prefix(ds, cfg.train_limit);
    data::validate(ds);
    return ds;
}

data::Dataset load_test(const ExperimentConfig& cfg) {
    data::Dataset ds = cfg.synthetic
                           ? data::make_synthetic(cfg.synthetic_test,
                                                  derive_seed(cfg.seed, {stream::synthetic_test}))
                           : data::load_split(cfg.data_dir, /*train=*/false);
    ds = data::take_prefix(ds, cfg.test_limit);
    data::validate(ds);
    return ds;
}

// Specs sorted by client id, truncated to n_clients, contract-checked.
std::vector<models::ModelSpec> resolve_specs(const ExperimentConfig& cfg,
                                             models::FusionContract& contract) {
    auto specs = cfg.model_spec_path.empty() ? models::stock_specs()
                                             : models::load_model_specs(cfg.model_spec_path);
    std::sort(specs.begin(), specs.end(),
              [](const auto& a, const auto& b) { return a.client_id < b.client_id; });
    require(static_cast<std::size_t>(cfg.n_clients) <= specs.size(),
            "need " + std::to_string(cfg.n_clients) + " model specs, have " +
                std::to_string(specs.size()));
    specs.resize(static_cast<std::size_t>(cfg.n_clients));
    contract.fusion_dim = static_cast<int>(models::base_output_dim(specs.front()));
    contract.batch_size = cfg.batch_size;
    const auto violations = models::validate_contract(specs, contract);
    if (!violations.empty()) throw ConfigError("model specs: " + violations.front().what);
    return specs;
}

const models::ModelSpec& fl_template(const std::vector<models::ModelSpec>& specs,
                                     proto::Protocol p) {
    const int want = p == proto::Protocol::fl1 ? 1 : 2;
    for (const auto& s : specs)
        if (s.client_id == want) return s;
    throw ConfigError("fl" + std::to_string(want) + " needs a model spec with client_id " +
                      std::to_string(want));
}

struct RunContext {
    std::vector<proto::ClientState> clients;
    models::ClientModel global;  // fl1/fl2
    Block<float> server;         // fsl shared part
};

RunContext make_run(const ExperimentConfig& cfg, const std::vector<models::ModelSpec>& specs,
                    const models::FusionContract& contract, const data::Dataset& train,
                    std::uint64_t run_seed) {
    auto prng = make_rng(run_seed, {stream::partition});
    const auto part = data::dirichlet_partition(train.labels, cfg.n_clients, cfg.alpha, prng,
                                                /*min_per_client=*/cfg.batch_size);

    RunContext ctx;
    if (cfg.protocol == proto::Protocol::fl1 || cfg.protocol == proto::Protocol::fl2) {
        auto rng = make_rng(run_seed, {stream::init, 0});
        ctx.global = models::build_model(fl_template(specs, cfg.protocol), contract, rng);
    } else if (cfg.protocol == proto::Protocol::fsl) {
        auto rng = make_rng(run_seed, {stream::init, 0});
        ctx.server = init_block<float>(specs.front().modular, rng);
    }

    ctx.clients.reserve(static_cast<std::size_t>(cfg.n_clients));
    for (int k = 0; k < cfg.n_clients; ++k) {
        const int id = k + 1;
        auto init_rng = make_rng(run_seed, {stream::init, static_cast<std::uint64_t>(id)});
        models::ClientModel model;
        switch (cfg.protocol) {
            case proto::Protocol::ifl:
                model = models::build_model(specs[static_cast<std::size_t>(k)], contract,
                                            init_rng);
                break;
            case proto::Protocol::fl1:
            case proto::Protocol::fl2:
                model = ctx.global;  // overwritten by the first broadcast anyway
                break;
            case proto::Protocol::fsl:
                model.base =
                    init_block<float>(specs[static_cast<std::size_t>(k)].base, init_rng);
                break;
        }
        data::BatchSampler sampler(part.client_indices[static_cast<std::size_t>(k)],
                                   cfg.batch_size,
                                   make_rng(run_seed, {stream::sampler,
                                                       static_cast<std::uint64_t>(id)}));
        ctx.clients.push_back(
            proto::ClientState{id, std::move(model), std::move(sampler)});
    }
    return ctx;
}

struct EvalOutput {
    std::vector<double> client_acc;
    Eigen::MatrixXd matrix;  // ifl only: n x n
};

EvalOutput evaluate(const ExperimentConfig& cfg, const RunContext& ctx,
                    const data::Dataset& test) {
    EvalOutput out;
    const std::size_t n = ctx.clients.size();
    out.client_acc.resize(n);
    switch (cfg.protocol) {
        case proto::Protocol::ifl: {
            std::vector<const Block<float>*> bases, mods;
            for (const auto& c : ctx.clients) {
                bases.push_back(&c.model.base);
                mods.push_back(&c.model.modular);
            }
            out.matrix = metrics::composition_matrix(bases, mods, test, cfg.threads);
            for (std::size_t k = 0; k < n; ++k)
                out.client_acc[k] = out.matrix(static_cast<Eigen::Index>(k),
                                               static_cast<Eigen::Index>(k));
            break;
        }
        case proto::Protocol::fl1:
        case proto::Protocol::fl2: {
            const double acc = metrics::test_accuracy(ctx.global.base, ctx.global.modular, test);
            std::fill(out.client_acc.begin(), out.client_acc.end(), acc);
            break;
        }
        case proto::Protocol::fsl: {
            std::vector<const Block<float>*> bases;
            for (const auto& c : ctx.clients) bases.push_back(&c.model.base);
            const std::vector<const Block<float>*> mods{&ctx.server};
            const auto m = metrics::composition_matrix(bases, mods, test, cfg.threads);
            for (std::size_t k = 0; k < n; ++k)
                out.client_acc[k] = m(static_cast<Eigen::Index>(k), 0);
            break;
        }
    }
    return out;
}

void save_checkpoints(const ExperimentConfig& cfg, const RunContext& ctx, int run_id) {
    const fs::path dir = cfg.out_dir / ("run_" + std::to_string(run_id)) / "checkpoints";
    fs::create_directories(dir);
    switch (cfg.protocol) {
        case proto::Protocol::ifl:
            for (const auto& c : ctx.clients) {
                const std::string stem = "client_" + std::to_string(c.id);
                save_block(c.model.base, dir / (stem + ".base.mfw"));
                save_block(c.model.modular, dir / (stem + ".modular.mfw"));
            }
            break;
        case proto::Protocol::fl1:
        case proto::Protocol::fl2:
            save_block(ctx.global.base, dir / "global.base.mfw");
            save_block(ctx.global.modular, dir / "global.modular.mfw");
            break;
        case proto::Protocol::fsl:
            for (const auto& c : ctx.clients)
                save_block(c.model.base,
                           dir / ("client_" + std::to_string(c.id) + ".base.mfw"));
            save_block(ctx.server, dir / "server.mfw");
            break;
    }
}

void write_config_echo(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["protocol"] = proto::to_string(cfg.protocol);
    j["n_clients"] = cfg.n_clients;
    j["rounds"] = cfg.rounds;
    j["local_steps"] = cfg.local_steps;
    j["batch_size"] = cfg.batch_size;
    j["alpha"] = cfg.alpha;
    j["lr_base"] = cfg.lr_base;
    j["lr_modular"] = cfg.lr_modular;
    j["seed"] = cfg.seed;
    j["mc_runs"] = cfg.mc_runs;
    j["data_dir"] = cfg.data_dir.string();
    j["synthetic"] = cfg.synthetic;
    j["synthetic_train"] = cfg.synthetic_train;
    j["synthetic_test"] = cfg.synthetic_test;
    j["synthetic_label_noise"] = cfg.synthetic_label_noise;
    j["train_limit"] = cfg.train_limit;
    j["test_limit"] = cfg.test_limit;
    j["eval_every"] = cfg.eval_every;
    j["threads"] = cfg.threads;
    j["summed_update"] = cfg.summed_update;
    j["float_bytes"] = cfg.costing.float_bytes;
    j["label_bytes"] = cfg.costing.label_bytes;
    j["bytes_per_mb"] = cfg.bytes_per_mb;
    j["out_dir"] = cfg.out_dir.string();
    j["model_spec_path"] = cfg.model_spec_path.string();
    j["save_checkpoints"] = cfg.save_checkpoints;
    std::ofstream out(cfg.out_dir / "config.resolved.json");
    if (!out) throw DataError("cannot write config echo under " + cfg.out_dir.string());
    out << j.dump(2) << '\n';
}

void write_csvs(const ExperimentConfig& cfg, const ExperimentResult& res) {
    std::vector<std::string> header{"run_id",
                                    "protocol",
                                    "round",
                                    "cumulative_uplink_mb",
                                    "cumulative_downlink_mb",
                                    "mean_accuracy"};
    for (int k = 1; k <= cfg.n_clients; ++k) header.push_back("acc_client_" + std::to_string(k));
    metrics::CsvWriter rounds(cfg.out_dir / "rounds.csv", header);
    for (const auto& r : res.rounds) {
        std::vector<std::string> row{std::to_string(r.run_id),
                                     proto::to_string(cfg.protocol),
                                     std::to_string(r.round),
                                     metrics::format_double(r.cum_uplink_mb),
                                     metrics::format_double(r.cum_downlink_mb),
                                     metrics::format_double(r.mean_accuracy)};
        for (double a : r.client_accuracy) row.push_back(metrics::format_double(a));
        rounds.write_row(row);
    }

    if (cfg.protocol != proto::Protocol::ifl) return;
    metrics::CsvWriter comp(cfg.out_dir / "composition.csv",
                            {"run_id", "round", "base_id", "modular_id", "accuracy"});
    for (const auto& c : res.compositions)
        comp.write_row({std::to_string(c.run_id), std::to_string(c.round),
                        std::to_string(c.base_id), std::to_string(c.modular_id),
                        metrics::format_double(c.accuracy)});
    metrics::CsvWriter sd(cfg.out_dir / "sd.csv", {"run_id", "round", "base_id", "sd_pp"});
    for (const auto& s : res.sds)
        sd.write_row({std::to_string(s.run_id), std::to_string(s.round),
                      std::to_string(s.base_id), metrics::format_double(s.sd_pp)});
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
    require(cfg.n_clients >= 1, "n_clients must be at least 1");
    require(cfg.rounds >= 1, "rounds must be at least 1");
    require(cfg.local_steps >= 0, "local_steps must be non-negative");
    require(cfg.batch_size >= 1, "batch_size must be at least 1");
    require(cfg.alpha > 0, "alpha must be positive");
    require(cfg.lr_base > 0 && std::isfinite(cfg.lr_base), "lr_base must be positive");
    require(cfg.lr_modular > 0 && std::isfinite(cfg.lr_modular), "lr_modular must be positive");
    require(cfg.mc_runs >= 1, "mc_runs must be at least 1");
    require(cfg.eval_every >= 0, "eval_every must be non-negative");
    require(cfg.threads >= 1, "threads must be at least 1");
    require(cfg.costing.float_bytes >= 1, "float_bytes must be at least 1");
    require(cfg.costing.label_bytes >= 0, "label_bytes must be non-negative");
    require(cfg.bytes_per_mb > 0, "bytes_per_mb must be positive");
    require(!cfg.out_dir.empty(), "out_dir must be set");
    require(cfg.synthetic || !cfg.data_dir.empty(),
            "either --synthetic or --data-dir is required");
    if (cfg.synthetic) {
        require(cfg.synthetic_train >= cfg.n_clients * cfg.batch_size,
                "synthetic_train too small for the requested clients and batch size");
        require(cfg.synthetic_test >= 1, "synthetic_test must be at least 1");
        require(cfg.synthetic_label_noise >= 0.0 && cfg.synthetic_label_noise < 1.0,
                "synthetic_label_noise must be in [0, 1)");
    }
    if (cfg.protocol == proto::Protocol::fl1 || cfg.protocol == proto::Protocol::fl2)
        require(!cfg.summed_update, "summed_update only applies to the split protocols");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    const auto train = load_train(cfg);
    const auto test = load_test(cfg);
    require(train.size() >= static_cast<Index>(cfg.n_clients) * cfg.batch_size,
            "training set too small for the requested clients and batch size");

    models::FusionContract contract;
    const auto specs = resolve_specs(cfg, contract);

    proto::TrainingConfig tc;
    tc.n_clients = cfg.n_clients;
    tc.local_steps = cfg.local_steps;
    tc.rounds = cfg.rounds;
    tc.batch_size = cfg.batch_size;
    tc.lr_base = cfg.lr_base;
    tc.lr_modular = cfg.lr_modular;
    tc.lr_fl = cfg.lr_base;
    tc.alpha = cfg.alpha;
    tc.summed_update = cfg.summed_update;

    fs::create_directories(cfg.out_dir);
    write_config_echo(cfg);

    ExperimentResult res;
    for (int run_id = 0; run_id < cfg.mc_runs; ++run_id) {
        const std::uint64_t run_seed =
            derive_seed(cfg.seed, {stream::run, static_cast<std::uint64_t>(run_id)});
        auto ctx = make_run(cfg, specs, contract, train, run_seed);

        metrics::CommLedger ledger;
        for (int round = 1; round <= cfg.rounds; ++round) {
            proto::RoundMetrics rm;
            switch (cfg.protocol) {
                case proto::Protocol::ifl:
                    rm = proto::ifl_round(ctx.clients, train, tc, cfg.costing, cfg.threads);
                    break;
                case proto::Protocol::fl1:
                case proto::Protocol::fl2:
                    rm = proto::fl_round(ctx.clients, ctx.global, train, tc, cfg.costing,
                                         cfg.threads);
                    break;
                case proto::Protocol::fsl:
                    rm = proto::fsl_round(ctx.clients, ctx.server, train, tc, cfg.costing,
                                          cfg.threads);
                    break;
            }
            ledger.add(rm);

            const bool scheduled = cfg.eval_every > 0 && round % cfg.eval_every == 0;
            if (!scheduled && round != cfg.rounds) continue;

            const auto ev = evaluate(cfg, ctx, test);
            RoundRecord rec;
            rec.run_id = run_id;
            rec.round = round;
            rec.cum_uplink_mb = metrics::to_mb(ledger.uplink_bytes, cfg.bytes_per_mb);
            rec.cum_downlink_mb = metrics::to_mb(ledger.downlink_bytes, cfg.bytes_per_mb);
            rec.client_accuracy = ev.client_acc;
            double mean = 0;
            for (double a : ev.client_acc) mean += a;
            rec.mean_accuracy = mean / static_cast<double>(ev.client_acc.size());
            res.rounds.push_back(std::move(rec));

            if (cfg.protocol == proto::Protocol::ifl) {
                for (Eigen::Index i = 0; i < ev.matrix.rows(); ++i)
                    for (Eigen::Index j = 0; j < ev.matrix.cols(); ++j)
                        res.compositions.push_back(CompositionRecord{
                            run_id, round, static_cast<int>(i) + 1, static_cast<int>(j) + 1,
                            ev.matrix(i, j)});
                if (ev.matrix.cols() >= 2) {
                    const auto sds = metrics::composition_sd_pp(ev.matrix);
                    for (std::size_t i = 0; i < sds.size(); ++i)
                        res.sds.push_back(
                            SdRecord{run_id, round, static_cast<int>(i) + 1, sds[i]});
                }
            }
        }
        if (cfg.save_checkpoints) save_checkpoints(cfg, ctx, run_id);
    }

    write_csvs(cfg, res);
    return res;
}

}  // namespace ifl::run
