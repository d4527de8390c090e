// seqcast command-line tool: data generation, training, evaluation, scan-order
// decoding, ablations, and the persistence baseline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqcast/checkpoint.hpp"
#include "seqcast/train.hpp"

using json = nlohmann::ordered_json;
using namespace seqcast;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "seqcast 0.1.0";

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhaseTimer {
    std::map<std::string, double> seconds;
    template <typename F>
    auto time(const std::string& phase, F&& f) {
        auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            seconds[phase] +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
        } else {
            auto out = f();
            seconds[phase] +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
            return out;
        }
    }
};

// Timings are only included on request: result files that must be
// bit-identical across same-seed runs embed the deterministic subset.
json make_manifest(const ModelConfig& mc, const TrainConfig& tc,
                   const std::string& data_path, std::uint64_t seed,
                   const PhaseTimer& timer, bool with_timings = true) {
    json m;
    m["version"] = kVersion;
    m["seed"] = seed;
    json cfg;
    for (auto& [k, v] : parse_kv_text(config_to_text(mc, tc))) cfg[k] = v;
    m["config"] = cfg;
    if (!data_path.empty()) {
        m["data"] = data_path;
        m["data_fingerprint"] = file_fingerprint(data_path);
    }
    if (with_timings) {
        json timings;
        for (auto& [phase, s] : timer.seconds) timings[phase] = s;
        m["timings_seconds"] = timings;
    }
    return m;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::pair<ModelConfig, TrainConfig> load_config(const std::string& path) {
    ModelConfig mc;
    TrainConfig tc;
    try {
        apply_config(read_kv_file(path), mc, tc);
        mc.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return {mc, tc};
}

TimeSeriesDataset load_data(const std::string& path, const ModelConfig& mc,
                            const TrainConfig& tc) {
    try {
        return load_csv(path, mc.K, tc.train_ratio, tc.val_ratio,
                        tc.standardize);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

std::vector<std::size_t> read_order_file(const std::string& path,
                                         std::size_t K) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open order file " + path);
    std::vector<std::size_t> order;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        order.push_back(std::stoul(line));
    }
    if (order.size() != K)
        throw ConfigError("order file lists " + std::to_string(order.size()) +
                          " variables, checkpoint has K=" + std::to_string(K));
    return order;
}

PermutationRecord run_solver(const CostGraph& graph, const std::string& solver,
                             std::uint64_t seed) {
    if (solver == "greedy") return solve_order_greedy(graph);
    if (solver == "ls") return solve_order_local_search(graph, seed);
    if (solver == "sa") return solve_order_sa(graph, SaSchedule{}, seed);
    if (solver == "bruteforce") {
        try {
            return solve_order_bruteforce(graph);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    throw ConfigError("unknown solver '" + solver + "'");
}

int cmd_gen_data(const std::string& out, std::size_t steps, std::size_t k,
                 std::uint64_t seed) {
    write_ett_csv(out, steps, k, seed);
    std::printf("wrote %s: %zu steps, %zu variables, seed %llu\n", out.c_str(),
                steps, k, static_cast<unsigned long long>(seed));
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, std::uint64_t seed_override,
              bool has_seed) {
    auto [mc, tc] = load_config(config_path);
    if (has_seed) mc.seed = seed_override;
    PhaseTimer timer;
    TimeSeriesDataset ds =
        timer.time("load_data", [&] { return load_data(data_path, mc, tc); });

    TrainResult result = timer.time("train", [&] { return train(mc, tc, ds); });

    fs::create_directories(out_dir);
    const std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
    timer.time("checkpoint",
               [&] { save_checkpoint(result.state, tc, ckpt); });

    json manifest = make_manifest(mc, tc, data_path, mc.seed, timer);
    json hist;
    hist["manifest"] = make_manifest(mc, tc, data_path, mc.seed, timer, false);
    hist["best_epoch"] = result.best_epoch;
    hist["best_val_mse"] = result.state.best_val;
    json epochs = json::array();
    for (const auto& e : result.history) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"val_mse", e.val_mse},
                          {"val_mae", e.val_mae}});
    }
    hist["epochs"] = epochs;
    write_json((fs::path(out_dir) / "history.json").string(), hist);
    write_json((fs::path(out_dir) / "manifest.json").string(), manifest);

    std::printf("trained %zu epochs, best epoch %zu, val MSE %.6f\n",
                result.history.size(), result.best_epoch,
                result.state.best_val);
    std::printf("checkpoint: %s\n", ckpt.c_str());
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& order_spec, const std::string& order_file,
             std::uint64_t seed, const std::string& out_dir) {
    LoadedCheckpoint lc = load_checkpoint(ckpt_path);
    const ModelConfig& mc = lc.state.model.cfg;
    PhaseTimer timer;
    TimeSeriesDataset ds = timer.time(
        "load_data", [&] { return load_data(data_path, mc, lc.train_config); });

    json result;
    if (order_spec.rfind("random:", 0) == 0) {
        const std::size_t n = std::stoul(order_spec.substr(7));
        if (n == 0) throw ConfigError("--order random:N needs N >= 1");
        Rng rng(seed, 77);
        double sum = 0.0, sumsq = 0.0, mae_sum = 0.0;
        timer.time("eval", [&] {
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<std::size_t> order = rng.permutation(mc.K);
                EvalResult r = evaluate(lc.state, ds, Split::test, order);
                sum += r.mse;
                sumsq += r.mse * r.mse;
                mae_sum += r.mae;
            }
        });
        const double mean = sum / static_cast<double>(n);
        const double var =
            std::max(sumsq / static_cast<double>(n) - mean * mean, 0.0);
        result["order"] = order_spec;
        result["samples"] = n;
        result["mse_mean"] = mean;
        result["mse_std"] = std::sqrt(var);
        result["mae_mean"] = mae_sum / static_cast<double>(n);
        std::printf("order=%s  MSE %.6f +/- %.6f  MAE %.6f  (T=%zu)\n",
                    order_spec.c_str(), mean, std::sqrt(var),
                    mae_sum / static_cast<double>(n), mc.T);
    } else {
        std::vector<std::size_t> order;
        if (order_spec == "identity") {
            order = identity_order(mc.K);
        } else if (order_spec == "decoded") {
            order = order_file.empty()
                        ? run_solver(lc.state.graph, "sa", seed).order
                        : read_order_file(order_file, mc.K);
        } else {
            throw ConfigError("unknown --order '" + order_spec + "'");
        }
        EvalResult r = timer.time(
            "eval", [&] { return evaluate(lc.state, ds, Split::test, order); });
        result["order"] = order_spec;
        result["order_indices"] = order;
        result["mse"] = r.mse;
        result["mae"] = r.mae;
        result["windows"] = r.windows;
        std::printf("order=%s  MSE %.6f  MAE %.6f  (T=%zu, %zu windows)\n",
                    order_spec.c_str(), r.mse, r.mae, mc.T, r.windows);
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        json doc;
        doc["manifest"] =
            make_manifest(mc, lc.train_config, data_path, seed, timer, false);
        doc["result"] = result;
        write_json((fs::path(out_dir) / "eval.json").string(), doc);
    }
    return 0;
}

int cmd_decode_order(const std::string& ckpt_path, const std::string& solver,
                     std::uint64_t seed, const std::string& out_file) {
    LoadedCheckpoint lc = load_checkpoint(ckpt_path);
    PhaseTimer timer;
    PermutationRecord rec = timer.time(
        "solve", [&] { return run_solver(lc.state.graph, solver, seed); });
    const double cost = path_cost(lc.state.graph, rec.order);

    std::ofstream out(out_file);
    if (!out) throw DataError("cannot write " + out_file);
    for (std::size_t v : rec.order) out << v << '\n';
    out.close();

    json doc;
    doc["manifest"] =
        make_manifest(lc.state.model.cfg, lc.train_config, "", seed, timer, false);
    doc["solver"] = solver;
    doc["order"] = rec.order;
    doc["path_cost"] = cost;
    write_json(out_file + ".json", doc);

    std::printf("solver=%s  path cost %.6f  order:", solver.c_str(), cost);
    for (std::size_t v : rec.order) std::printf(" %zu", v);
    std::printf("\n%s\n", out_file.c_str());
    return 0;
}

struct AblationRow {
    std::string name;
    double test_mse = 0.0;
    double test_mae = 0.0;
};

AblationRow run_cell(const std::string& name, ModelConfig mc, TrainConfig tc,
                     const TimeSeriesDataset& ds, bool vast_on,
                     std::uint64_t seed) {
    tc.vpt = vast_on;
    TrainResult r = train(mc, tc, ds);
    std::vector<std::size_t> order = identity_order(mc.K);
    if (vast_on) order = solve_order_sa(r.state.graph, SaSchedule{}, seed).order;
    EvalResult e = evaluate(r.state, ds, Split::test, order);
    return {name, e.mse, e.mae};
}

int cmd_ablate(const std::string& config_path, const std::string& data_path,
               const std::string& out_dir, bool grid, bool dropout_sweep,
               std::uint64_t seed_override, bool has_seed) {
    auto [mc, tc] = load_config(config_path);
    if (has_seed) mc.seed = seed_override;
    if (!grid && !dropout_sweep) grid = true;
    PhaseTimer timer;
    TimeSeriesDataset ds =
        timer.time("load_data", [&] { return load_data(data_path, mc, tc); });

    std::vector<AblationRow> rows;
    if (grid) {
        for (int vst = 1; vst >= 0; --vst)
            for (int tmb = 1; tmb >= 0; --tmb)
                for (int vast = 1; vast >= 0; --vast) {
                    ModelConfig cell = mc;
                    cell.vst = vst != 0;
                    cell.block_variant = tmb != 0 ? BlockVariant::temporal
                                                  : BlockVariant::vanilla;
                    std::string name = std::string("vst=") +
                                       (vst ? "on" : "off") + " block=" +
                                       (tmb ? "tmb" : "vanilla") + " vast=" +
                                       (vast ? "on" : "off");
                    timer.time("grid", [&] {
                        rows.push_back(
                            run_cell(name, cell, tc, ds, vast != 0, mc.seed));
                    });
                }
    }
    if (dropout_sweep) {
        for (double rate : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
            ModelConfig cell = mc;
            cell.dropout_rate = rate;
            char name[32];
            std::snprintf(name, sizeof(name), "dropout=%.1f", rate);
            timer.time("dropout", [&] {
                rows.push_back(run_cell(name, cell, tc, ds, false, mc.seed));
            });
        }
    }

    std::printf("%-36s %10s %10s\n", "configuration", "test MSE", "test MAE");
    for (const auto& r : rows)
        std::printf("%-36s %10.6f %10.6f\n", r.name.c_str(), r.test_mse,
                    r.test_mae);

    fs::create_directories(out_dir);
    json manifest = make_manifest(mc, tc, data_path, mc.seed, timer, false);
    {
        std::ofstream out(fs::path(out_dir) / "ablation.csv");
        out << "# manifest: " << manifest.dump() << '\n';
        out << "configuration,test_mse,test_mae\n";
        out.precision(17);
        for (const auto& r : rows)
            out << r.name << ',' << r.test_mse << ',' << r.test_mae << '\n';
    }
    json doc;
    doc["manifest"] = manifest;
    json jrows = json::array();
    for (const auto& r : rows)
        jrows.push_back({{"configuration", r.name},
                         {"test_mse", r.test_mse},
                         {"test_mae", r.test_mae}});
    doc["rows"] = jrows;
    write_json((fs::path(out_dir) / "ablation.json").string(), doc);
    return 0;
}

int cmd_baseline(const std::string& data_path, std::size_t L, std::size_t T) {
    TimeSeriesDataset ds;
    try {
        ds = load_csv(data_path, 0, 0.7, 0.1, true);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    BaselineResult r = persistence_baseline(ds, Split::test, L, T);
    std::printf("persistence baseline: MSE %.6f  MAE %.6f  (%zu windows)\n",
                r.mse, r.mae, r.windows);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"seqcast: selective-scan time series forecasting"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, data_path, ckpt_path, out_dir = "runs";
    std::string order_spec = "identity", order_file, solver = "sa";
    std::string out_file = "order.txt";
    std::uint64_t seed = 1;
    std::size_t steps = 2000, k = 7, lookback = 96, horizon = 96;

    auto* gen = app.add_subcommand("gen-data", "write a synthetic ETT-style CSV");
    gen->add_option("--out", out_file, "output CSV path")->required();
    gen->add_option("--steps", steps, "number of time steps");
    gen->add_option("--k", k, "number of variables");
    gen->add_option("--seed", seed, "generator seed");

    auto* tr = app.add_subcommand("train", "train a model");
    tr->add_option("--config", config_path, "key=value config file")->required();
    tr->add_option("--data", data_path, "input CSV")->required();
    tr->add_option("--out", out_dir, "output directory");
    auto* tr_seed = tr->add_option("--seed", seed, "override config seed");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    ev->add_option("--data", data_path, "input CSV")->required();
    ev->add_option("--order", order_spec, "identity | random:N | decoded");
    ev->add_option("--order-file", order_file,
                   "decoded-order file (default: solve SA from the checkpoint)");
    ev->add_option("--seed", seed, "seed for random orders / SA");
    std::string eval_out;
    ev->add_option("--out", eval_out, "output directory for eval.json");

    auto* dec = app.add_subcommand("decode-order", "decode a variable scan order");
    dec->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    dec->add_option("--solver", solver, "greedy | ls | sa | bruteforce");
    dec->add_option("--seed", seed, "solver seed");
    dec->add_option("--out", out_file, "order file (one index per line)");

    auto* ab = app.add_subcommand("ablate", "component grid / dropout sweep");
    ab->add_option("--config", config_path, "key=value config file")->required();
    ab->add_option("--data", data_path, "input CSV")->required();
    ab->add_option("--out", out_dir, "output directory");
    bool grid = false, sweep = false;
    ab->add_flag("--grid", grid, "run the 2x2x2 component grid (default)");
    ab->add_flag("--dropout-sweep", sweep, "run the dropout-rate sweep");
    auto* ab_seed = ab->add_option("--seed", seed, "override config seed");

    auto* base = app.add_subcommand("baseline", "persistence baseline");
    base->add_option("--data", data_path, "input CSV")->required();
    base->add_option("--lookback", lookback, "lookback window L");
    base->add_option("--horizon", horizon, "forecast horizon T");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(out_file, steps, k, seed);
        if (tr->parsed())
            return cmd_train(config_path, data_path, out_dir, seed,
                             tr_seed->count() > 0);
        if (ev->parsed())
            return cmd_eval(ckpt_path, data_path, order_spec, order_file, seed,
                            eval_out);
        if (dec->parsed())
            return cmd_decode_order(ckpt_path, solver, seed, out_file);
        if (ab->parsed())
            return cmd_ablate(config_path, data_path, out_dir, grid, sweep,
                              seed, ab_seed->count() > 0);
        if (base->parsed()) return cmd_baseline(data_path, lookback, horizon);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    }
    return 0;
}
