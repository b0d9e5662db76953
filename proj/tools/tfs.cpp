// Command-line front end: select, compare, mi-rank, mrmr.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfs/baselines.hpp"
#include "tfs/errors.hpp"
#include "tfs/harness.hpp"

namespace fs = std::filesystem;
using namespace tfs;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

harness::ExperimentConfig load(const fs::path& config, std::optional<std::uint64_t> seed,
                               const std::string& external_order) {
    auto cfg = harness::load_config(config);
    if (seed) cfg.seed = *seed;
    if (!external_order.empty()) {
        cfg.selector = harness::SelectorKind::external;
        cfg.external_order = external_order;
    }
    cfg.validate();
    return cfg;
}

void dump_model(const vi::VariationalParams& params, const fs::path& path) {
    if (path.extension() == ".bin") {
        vi::write_binary(params, path);
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << vi::to_json(params).dump(2) << '\n';
}

void print_order(const data::Dataset& train, const std::vector<int>& order, const std::vector<double>* scores) {
    for (std::size_t r = 0; r < order.size(); ++r) {
        const int f = order[r];
        std::cout << r + 1 << '\t' << train.feature_names()[static_cast<std::size_t>(f)];
        if (scores) std::cout << '\t' << std::setprecision(6) << (*scores)[static_cast<std::size_t>(f)];
        std::cout << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Target-focused Bayesian feature selection"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", dump_path, external_order, mrmr_variant = "MID";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> runs;
    std::vector<std::size_t> checkpoints = harness::kDefaultCheckpoints;
    std::string compare_csv;

    auto* select = app.add_subcommand("select", "run one experiment and write run.json + trend.csv");
    select->add_option("--config", config_path, "experiment config (JSON)")->required();
    select->add_option("--seed", seed, "override the config seed");
    select->add_option("--out-dir", out_dir, "output directory");
    select->add_option("--dump-model", dump_path, "write the final model (.json, or .bin for binary)");
    select->add_option("--external-order", external_order, "evaluate a newline-separated feature order");

    auto* cmp = app.add_subcommand("compare", "F1 table at fixed feature counts from run artifacts");
    cmp->add_option("runs", runs, "run.json files")->required();
    cmp->add_option("--checkpoints", checkpoints, "feature counts")->delimiter(',');
    cmp->add_option("--csv", compare_csv, "also write the table as CSV");

    auto* mi = app.add_subcommand("mi-rank", "rank features by kNN mutual information with the target");
    mi->add_option("--config", config_path, "experiment config (JSON)")->required();
    mi->add_option("--seed", seed, "override the config seed");

    auto* mrmr = app.add_subcommand("mrmr", "mRMR feature order");
    mrmr->add_option("--config", config_path, "experiment config (JSON)")->required();
    mrmr->add_option("--seed", seed, "override the config seed");
    mrmr->add_option("--variant", mrmr_variant, "MID or MIQ")->check(CLI::IsMember({"MID", "MIQ"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*select) {
            auto cfg = load(config_path, seed, external_order);
            auto artifact = harness::run_experiment(cfg);
            harness::write_artifact(artifact, out_dir);
            if (!dump_path.empty()) dump_model(artifact.final_model, dump_path);
            std::cout << "selected:";
            for (const auto& n : artifact.record["selection"]["selected_names"]) std::cout << ' ' << n.get<std::string>();
            std::cout << "\nwrote " << (fs::path(out_dir) / "run.json").string() << " and "
                      << (fs::path(out_dir) / "trend.csv").string() << '\n';
        } else if (*cmp) {
            std::vector<nlohmann::json> artifacts;
            for (const auto& r : runs) artifacts.push_back(harness::read_artifact(r));
            auto table = harness::compare(artifacts, checkpoints);
            std::cout << table.render();
            if (!compare_csv.empty()) {
                std::ofstream out(compare_csv);
                if (!out) throw DataError("cannot write " + compare_csv);
                table.write_csv(out);
            }
        } else if (*mi) {
            auto cfg = load(config_path, seed, "");
            auto prepared = harness::prepare_data(cfg);
            auto mi_cfg = cfg.mi;
            mi_cfg.seed = cfg.seed;
            const auto& train = prepared.sets.train;
            auto scores = baselines::mi_scores(train, mi_cfg);
            auto order = baselines::mi_rank(train, static_cast<std::size_t>(train.cols()), mi_cfg);
            print_order(train, order, &scores);
        } else if (*mrmr) {
            auto cfg = load(config_path, seed, "");
            cfg.selector = mrmr_variant == "MIQ" ? harness::SelectorKind::mrmr_miq : harness::SelectorKind::mrmr_mid;
            auto prepared = harness::prepare_data(cfg);
            print_order(prepared.sets.train, harness::baseline_order(cfg, prepared), nullptr);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ContractViolation& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
