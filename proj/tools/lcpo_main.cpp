#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcpo/config.hpp"
#include "lcpo/em.hpp"
#include "lcpo/losses.hpp"
#include "lcpo/synth_data.hpp"
#include "lcpo/verify.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes are a stable contract: 0 success, 1 verification failure,
// 2 configuration error, 3 numeric failure.
constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericFailure = 3;

constexpr std::uint64_t kDefaultVerifySeed = 42;

lcpo::KvConfig load_config(const std::string& path, const std::uint64_t* seed) {
    lcpo::KvConfig kv = lcpo::KvConfig::parse_file(path);
    if (seed != nullptr) kv.set("run.seed", std::to_string(*seed));
    return kv;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 const std::uint64_t* seed) {
    const lcpo::KvConfig kv = load_config(config_path, seed);
    const lcpo::RunConfig cfg = lcpo::RunConfig::from_kv(kv);
    cfg.gen.validate();

    const lcpo::Dataset ds = lcpo::generate(cfg.gen);
    fs::create_directories(out_dir);
    const std::string dataset_path = out_dir + "/" + cfg.name + ".jsonl";
    const std::string text = lcpo::to_jsonl(ds);
    write_text_file(dataset_path, text);

    std::vector<std::int64_t> counts(static_cast<std::size_t>(cfg.gen.k_annotators), 0);
    for (const auto& pair : ds) {
        ++counts[static_cast<std::size_t>(pair.annotator_id)];
    }

    nlohmann::ordered_json manifest;
    manifest["run"] = cfg.name;
    manifest["config_hash"] = cfg.config_hash;
    manifest["seed"] = cfg.gen.seed;
    manifest["n_pairs"] = ds.size();
    manifest["k_annotators"] = cfg.gen.k_annotators;
    manifest["annotator_counts"] = counts;
    // Recorded by name, not path: the manifest sits next to the dataset and
    // the pair should stay valid when the directory moves.
    manifest["dataset_file"] = cfg.name + ".jsonl";
    manifest["content_hash"] = lcpo::hex_u64(lcpo::fnv1a64(text));
    manifest["config"] = kv.entries();
    const std::string manifest_path = out_dir + "/" + cfg.name + ".manifest.json";
    write_text_file(manifest_path, manifest.dump(2) + "\n");

    std::cout << "wrote " << dataset_path << " (" << ds.size() << " pairs)\n"
              << "wrote " << manifest_path << "\n";
    return kExitOk;
}

std::size_t checked_dataset_dim(const lcpo::Dataset& ds, const lcpo::KvConfig& kv,
                                const std::string& path) {
    if (ds.empty()) throw lcpo::ConfigError("dataset is empty: " + path);
    const std::size_t dim = ds.front().features.phi_w.size();
    for (const auto& pair : ds) {
        if (pair.features.phi_w.size() != dim || pair.features.phi_l.size() != dim) {
            throw lcpo::ConfigError("dimension mismatch in dataset at pair id " +
                                    std::to_string(pair.id));
        }
    }
    if (kv.has("data.feature_dim") &&
        kv.get_int("data.feature_dim") != static_cast<int>(dim)) {
        throw lcpo::ConfigError(
            "dimension mismatch: config data.feature_dim = " +
            std::to_string(kv.get_int("data.feature_dim")) +
            " but dataset has dimension " + std::to_string(dim));
    }
    return dim;
}

int cmd_train(const std::string& config_path, const std::string& dataset_path,
              const std::string& out_dir, const std::uint64_t* seed) {
    const lcpo::KvConfig kv = load_config(config_path, seed);
    const lcpo::RunConfig cfg = lcpo::RunConfig::from_kv(kv);

    const lcpo::Dataset ds = lcpo::read_jsonl(dataset_path);
    const std::size_t dim = checked_dataset_dim(ds, kv, dataset_path);

    const lcpo::TrainResult res = lcpo::run_lcpo(
        ds, lcpo::PolicyParams::zeros(dim), cfg.loss, cfg.em, cfg.opt);

    fs::create_directories(out_dir);
    const std::string metrics_path = out_dir + "/" + cfg.name + "_metrics.csv";
    lcpo::write_metrics_csv(metrics_path, res.metrics,
                            "config_hash=" + cfg.config_hash);

    nlohmann::ordered_json state;
    state["run"] = cfg.name;
    state["config_hash"] = cfg.config_hash;
    state["loss_kind"] = lcpo::loss_kind_name(cfg.loss.kind);
    state["theta"] = res.params.theta();
    state["theta_ref"] = res.params.theta_ref();
    state["eta"] = res.table.eta;
    state["counts"] = res.table.counts;
    const std::string state_path = out_dir + "/" + cfg.name + "_state.json";
    write_text_file(state_path, state.dump(2) + "\n");

    std::cout << "wrote " << metrics_path << "\n"
              << "wrote " << state_path << "\n"
              << "final mean loss " << res.metrics.back().mean_loss << ", eta";
    for (double eta : res.table.eta) std::cout << ' ' << eta;
    std::cout << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& suite, const std::string& out_dir,
               const std::uint64_t* seed) {
    const std::uint64_t run_seed = seed != nullptr ? *seed : kDefaultVerifySeed;
    lcpo::KvConfig kv;
    kv.set("verify.suite", suite);
    kv.set("run.seed", std::to_string(run_seed));
    const std::string hash = lcpo::hex_u64(lcpo::fnv1a64(kv.canonical_text()));

    const lcpo::SuiteReport report = lcpo::run_suite(suite, run_seed);
    fs::create_directories(out_dir);
    const std::string report_path = out_dir + "/verify_" + suite + ".json";
    lcpo::write_report_json(report_path, report, hash);

    for (const lcpo::Check& c : report.checks) {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
                  << " measured=" << c.measured
                  << " threshold=" << c.threshold << "\n";
    }
    std::cout << "suite " << report.suite << ": "
              << (report.pass ? "PASS" : "FAIL") << " (" << report_path << ")\n";
    return report.pass ? kExitOk : kExitVerifyFailure;
}

struct AblationRow {
    std::string sweep;
    double value = 0.0;
    double final_eta_err = 0.0;
    double final_mean_loss = 0.0;
    int epochs_to_tol = -1;
    std::string status = "ok";
};

AblationRow run_cell(const std::string& sweep, double value,
                     const lcpo::Dataset& ds, const lcpo::RunConfig& cfg,
                     const lcpo::EmConfig& em) {
    AblationRow row;
    row.sweep = sweep;
    row.value = value;
    try {
        const std::size_t dim = ds.front().features.phi_w.size();
        const lcpo::TrainResult res = lcpo::run_lcpo(
            ds, lcpo::PolicyParams::zeros(dim), cfg.loss, em, cfg.opt);

        const auto eta_err = [&](const std::vector<double>& eta) {
            double err = 0.0;
            for (std::size_t k = 0; k < eta.size(); ++k) {
                err = std::max(err, std::fabs(eta[k] - cfg.gen.eta_true[k]));
            }
            return err;
        };
        row.final_eta_err = eta_err(res.table.eta);
        row.final_mean_loss = res.metrics.back().mean_loss;
        for (const lcpo::MetricsRow& m : res.metrics) {
            if (eta_err(m.eta) < 0.05) {
                row.epochs_to_tol = m.epoch + 1;
                break;
            }
        }
    } catch (const std::exception& e) {
        row.final_eta_err = std::nan("");
        row.final_mean_loss = std::nan("");
        std::string msg = e.what();
        for (char& c : msg) {
            if (c == ',' || c == '\n') c = ';';
        }
        row.status = "error: " + msg;
    }
    return row;
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir,
               const std::uint64_t* seed) {
    const lcpo::KvConfig kv = load_config(config_path, seed);
    const lcpo::RunConfig cfg = lcpo::RunConfig::from_kv(kv);
    cfg.gen.validate();

    std::vector<double> eta_grid{0.99, 0.9, 0.75, 0.55};
    std::vector<double> alpha_grid{0.001, 0.01, 0.1, 0.5, 1.0};
    if (kv.has("ablate.eta_init")) eta_grid = kv.get_double_list("ablate.eta_init");
    if (kv.has("ablate.alpha")) alpha_grid = kv.get_double_list("ablate.alpha");

    const lcpo::Dataset ds = lcpo::generate(cfg.gen);  // shared across cells

    std::vector<AblationRow> rows;
    for (double eta0 : eta_grid) {
        lcpo::EmConfig em = cfg.em;
        em.eta_init = eta0;
        rows.push_back(run_cell("eta_init", eta0, ds, cfg, em));
    }
    for (double alpha : alpha_grid) {
        lcpo::EmConfig em = cfg.em;
        em.alpha = alpha;
        rows.push_back(run_cell("alpha", alpha, ds, cfg, em));
    }

    fs::create_directories(out_dir);
    const std::string table_path = out_dir + "/" + cfg.name + "_ablation.csv";
    std::ofstream out(table_path);
    if (!out) throw std::runtime_error("cannot open output file: " + table_path);
    out.precision(17);
    out << "# config_hash=" << cfg.config_hash << "\n";
    out << "sweep,param_value,final_eta_err,final_mean_loss,epochs_to_tol,status\n";
    for (const AblationRow& row : rows) {
        out << row.sweep << ',' << row.value << ',' << row.final_eta_err << ','
            << row.final_mean_loss << ',' << row.epochs_to_tol << ','
            << row.status << "\n";
    }
    std::cout << "wrote " << table_path << " (" << rows.size() << " cells)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"preference training with latent annotator reliabilities"};
    app.require_subcommand(1);

    std::string config_path, dataset_path, suite;
    std::string out_dir = ".";
    std::uint64_t seed = 0;

    auto* gen = app.add_subcommand("generate", "write a synthetic dataset and its manifest");
    gen->add_option("--config", config_path, "config file (key = value lines)")->required();
    gen->add_option("--out", out_dir, "output directory");
    auto* gen_seed = gen->add_option("--seed", seed, "override run.seed");

    auto* train = app.add_subcommand("train", "run the EM training loop on a dataset");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--dataset", dataset_path, "JSONL dataset")->required();
    train->add_option("--out", out_dir, "output directory");
    auto* train_seed = train->add_option("--seed", seed, "override run.seed");

    auto* verify = app.add_subcommand("verify", "run a named verification suite");
    verify->add_option("--suite", suite,
                       "FIXED_POINT | CONVERGENCE | IDENTITY | DEGENERATE | "
                       "RECOVERY_SINGLE | RECOVERY_TWO")->required();
    verify->add_option("--out", out_dir, "output directory");
    auto* verify_seed = verify->add_option("--seed", seed, "suite seed");

    auto* ablate = app.add_subcommand("ablate", "sweep eta_init and alpha grids");
    ablate->add_option("--config", config_path, "config file")->required();
    ablate->add_option("--out", out_dir, "output directory");
    auto* ablate_seed = ablate->add_option("--seed", seed, "override run.seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (gen->parsed()) {
            return cmd_generate(config_path, out_dir,
                                gen_seed->count() ? &seed : nullptr);
        }
        if (train->parsed()) {
            return cmd_train(config_path, dataset_path, out_dir,
                             train_seed->count() ? &seed : nullptr);
        }
        if (verify->parsed()) {
            return cmd_verify(suite, out_dir,
                              verify_seed->count() ? &seed : nullptr);
        }
        if (ablate->parsed()) {
            return cmd_ablate(config_path, out_dir,
                              ablate_seed->count() ? &seed : nullptr);
        }
    } catch (const lcpo::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumericFailure;
    } catch (const lcpo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitConfigError;
}
