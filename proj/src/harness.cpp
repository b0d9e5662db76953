#include "tfs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string_view>

#include "tfs/errors.hpp"

namespace tfs::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string kl_mode_name(vi::KlMode m) { return m == vi::KlMode::analytic ? "analytic" : "monte_carlo"; }

vi::KlMode kl_mode_from(const std::string& s) {
    if (s == "monte_carlo") return vi::KlMode::monte_carlo;
    if (s == "analytic") return vi::KlMode::analytic;
    throw ConfigError("train.kl_mode: expected 'monte_carlo' or 'analytic', got '" + s + "'");
}

std::string similarity_name(scoring::SimilarityMode m) {
    return m == scoring::SimilarityMode::absolute ? "absolute" : "signed";
}

scoring::SimilarityMode similarity_from(const std::string& s) {
    if (s == "absolute") return scoring::SimilarityMode::absolute;
    if (s == "signed") return scoring::SimilarityMode::signed_value;
    throw ConfigError("similarity: expected 'absolute' or 'signed', got '" + s + "'");
}

// Reads an optional field, reporting type errors with the field path.
template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + key + ": " + e.what());
    }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown field '" + where + key + "'");
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(std::string(key) + ": expected an object");
    return j.at(key);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

}  // namespace

std::string to_string(SelectorKind k) {
    switch (k) {
        case SelectorKind::target_focused: return "TF";
        case SelectorKind::mi: return "MI";
        case SelectorKind::mrmr_mid: return "mRMR-MID";
        case SelectorKind::mrmr_miq: return "mRMR-MIQ";
        case SelectorKind::external: return "external";
    }
    return "unknown";
}

SelectorKind selector_from_string(const std::string& s) {
    for (auto k : {SelectorKind::target_focused, SelectorKind::mi, SelectorKind::mrmr_mid, SelectorKind::mrmr_miq,
                   SelectorKind::external})
        if (to_string(k) == s) return k;
    throw ConfigError("selector: unknown selector '" + s + "' (TF, MI, mRMR-MID, mRMR-MIQ, external)");
}

void ExperimentConfig::validate() const {
    if (dataset_path.empty()) throw ConfigError("dataset.path is required");
    if (target_column.empty()) throw ConfigError("dataset.target_column is required");
    if (focus_label.empty()) throw ConfigError("focus_label is required");
    if (selector == SelectorKind::external && external_order.empty())
        throw ConfigError("selector 'external' needs external_order");
    thresholds.validate();
    train.validate();
    weights.validate();
    split.validate();
    mi.validate();
    if (!(oversample_cap > 0.0)) throw ConfigError("oversample_cap must be positive");
    if (confidence_draws < 1) throw ConfigError("confidence_draws must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

json ExperimentConfig::to_json() const {
    json j = {
        {"dataset", {{"path", dataset_path.generic_string()}, {"target_column", target_column}, {"missing_token", missing_token}}},
        {"focus_label", focus_label},
        {"selector", harness::to_string(selector)},
        {"thresholds",
         {{"budget", thresholds.budget},
          {"fp", thresholds.fp},
          {"fn", thresholds.fn},
          {"confidence", thresholds.confidence},
          {"enforce", thresholds.enforce}}},
        {"train",
         {{"iterations", train.iterations},
          {"learning_rate", train.learning_rate},
          {"mc_samples", train.mc_samples},
          {"noise_var", train.noise_var},
          {"kl_mode", kl_mode_name(train.kl_mode)}}},
        {"weights", {{"confidence", weights.confidence}, {"cov", weights.cov}, {"cos", weights.cos}}},
        {"similarity", similarity_name(similarity)},
        {"split", {{"train_fraction", split.train_fraction}, {"test_fraction", split.test_fraction}}},
        {"oversample_cap", oversample_cap},
        {"confidence_draws", confidence_draws},
        {"mi", {{"k_neighbors", mi.k_neighbors}, {"rank_transform", mi.rank_transform}}},
        {"seed", seed},
        {"threads", threads},
        {"checkpoints", checkpoints},
    };
    if (!external_order.empty()) j["external_order"] = external_order.generic_string();
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentConfig c;
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return (path.is_relative() && !base_dir.empty()) ? (base_dir / path).lexically_normal() : path;
    };

    reject_unknown(j,
                   {"dataset", "focus_label", "selector", "external_order", "thresholds", "train", "weights",
                    "similarity", "split", "oversample_cap", "confidence_draws", "mi", "seed", "threads", "checkpoints"},
                   "");
    const auto& ds = section(j, "dataset");
    reject_unknown(ds, {"path", "target_column", "missing_token"}, "dataset.");
    std::string path;
    read(ds, "path", path, "dataset.");
    if (!path.empty()) c.dataset_path = resolve(path);
    read(ds, "target_column", c.target_column, "dataset.");
    read(ds, "missing_token", c.missing_token, "dataset.");
    read(j, "focus_label", c.focus_label, "");

    std::string sel = to_string(c.selector);
    read(j, "selector", sel, "");
    c.selector = selector_from_string(sel);
    std::string ext;
    read(j, "external_order", ext, "");
    if (!ext.empty()) c.external_order = resolve(ext);

    const auto& th = section(j, "thresholds");
    reject_unknown(th, {"budget", "fp", "fn", "confidence", "enforce"}, "thresholds.");
    read(th, "budget", c.thresholds.budget, "thresholds.");
    read(th, "fp", c.thresholds.fp, "thresholds.");
    read(th, "fn", c.thresholds.fn, "thresholds.");
    read(th, "confidence", c.thresholds.confidence, "thresholds.");
    read(th, "enforce", c.thresholds.enforce, "thresholds.");

    const auto& tr = section(j, "train");
    reject_unknown(tr, {"iterations", "learning_rate", "mc_samples", "noise_var", "kl_mode"}, "train.");
    read(tr, "iterations", c.train.iterations, "train.");
    read(tr, "learning_rate", c.train.learning_rate, "train.");
    read(tr, "mc_samples", c.train.mc_samples, "train.");
    read(tr, "noise_var", c.train.noise_var, "train.");
    std::string kl = kl_mode_name(c.train.kl_mode);
    read(tr, "kl_mode", kl, "train.");
    c.train.kl_mode = kl_mode_from(kl);

    const auto& w = section(j, "weights");
    reject_unknown(w, {"confidence", "cov", "cos"}, "weights.");
    read(w, "confidence", c.weights.confidence, "weights.");
    read(w, "cov", c.weights.cov, "weights.");
    read(w, "cos", c.weights.cos, "weights.");

    std::string sim = similarity_name(c.similarity);
    read(j, "similarity", sim, "");
    c.similarity = similarity_from(sim);

    const auto& sp = section(j, "split");
    reject_unknown(sp, {"train_fraction", "test_fraction"}, "split.");
    read(sp, "train_fraction", c.split.train_fraction, "split.");
    read(sp, "test_fraction", c.split.test_fraction, "split.");

    read(j, "oversample_cap", c.oversample_cap, "");
    read(j, "confidence_draws", c.confidence_draws, "");
    const auto& mi = section(j, "mi");
    reject_unknown(mi, {"k_neighbors", "rank_transform"}, "mi.");
    read(mi, "k_neighbors", c.mi.k_neighbors, "mi.");
    read(mi, "rank_transform", c.mi.rank_transform, "mi.");
    read(j, "seed", c.seed, "");
    read(j, "threads", c.threads, "");
    read(j, "checkpoints", c.checkpoints, "");
    c.split.seed = c.seed;
    c.mi.seed = c.seed;
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        auto cfg = ExperimentConfig::from_json(j, path.parent_path());
        cfg.validate();
        return cfg;
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    PreparedData p;
    p.full = data::load_csv(cfg.dataset_path, cfg.target_column, cfg.missing_token);
    p.theta = p.full.label_of(cfg.focus_label);
    data::SplitSpec split = cfg.split;
    split.seed = cfg.seed;
    p.sets = data::prepare(p.full, {split, cfg.oversample_cap});
    return p;
}

std::vector<int> baseline_order(const ExperimentConfig& cfg, const PreparedData& prepared) {
    const auto& train = prepared.sets.train;
    const std::size_t budget = std::min<std::size_t>(cfg.thresholds.budget, static_cast<std::size_t>(train.cols()));
    baselines::MiConfig mi = cfg.mi;
    mi.seed = cfg.seed;
    switch (cfg.selector) {
        case SelectorKind::mi: return baselines::mi_rank(train, budget, mi);
        case SelectorKind::mrmr_mid: return baselines::mrmr_select(train, budget, baselines::MrmrVariant::MID, mi);
        case SelectorKind::mrmr_miq: return baselines::mrmr_select(train, budget, baselines::MrmrVariant::MIQ, mi);
        case SelectorKind::external: {
            auto order = baselines::read_external_order(cfg.external_order, prepared.full);
            if (order.size() > budget) order.resize(budget);
            return order;
        }
        case SelectorKind::target_focused: break;
    }
    throw ContractViolation("baseline_order called for the target-focused selector");
}

RunArtifact run_experiment(const ExperimentConfig& cfg) {
    const auto prepared = prepare_data(cfg);
    const auto& sets = prepared.sets;

    RunArtifact art;
    json selection;
    std::vector<metrics::Evaluation> evals;
    if (cfg.selector == SelectorKind::target_focused) {
        selector::SelectionConfig sc;
        sc.theta = prepared.theta;
        sc.thresholds = cfg.thresholds;
        sc.weights = cfg.weights;
        sc.similarity = cfg.similarity;
        sc.train = cfg.train;
        sc.confidence_draws = cfg.confidence_draws;
        sc.seed = cfg.seed;
        sc.threads = cfg.threads;
        auto state = selector::run_selection(sets, sc);
        art.selected = state.selected;
        for (const auto& r : state.history) evals.push_back(r.test);
        selection = selector::to_json(state, sets.train.feature_names());
    } else {
        art.selected = baseline_order(cfg, prepared);
        evals = baselines::evaluate_baseline(art.selected, sets, prepared.theta, cfg.train, cfg.confidence_draws, cfg.seed);
        std::vector<std::string> names;
        for (int f : art.selected) names.push_back(sets.train.feature_names()[static_cast<std::size_t>(f)]);
        json per_prefix = json::array();
        for (const auto& e : evals) per_prefix.push_back(selector::to_json(e));
        selection = {{"selected", art.selected}, {"selected_names", names}, {"evaluations", per_prefix}};
    }
    art.trend = metrics::assemble_trend(evals);

    // Same seed as the last recorded evaluation, so this reproduces that model.
    selector::evaluate_on_test(art.selected, sets, prepared.theta, cfg.train, 1,
                               derive_seed(cfg.seed, {static_cast<std::uint64_t>(art.selected.size())}),
                               &art.final_model);

    json trend = json::array();
    for (std::size_t i = 0; i < art.trend.size(); ++i)
        trend.push_back({{"features", art.trend.features[i]},
                         {"confidence", art.trend.confidence[i]},
                         {"confidence_var", art.trend.confidence_var[i]},
                         {"fp_rate", art.trend.fp_rate[i]},
                         {"fn_rate", art.trend.fn_rate[i]},
                         {"f1", art.trend.f1[i]}});

    art.record = {
        {"config", cfg.to_json()},
        {"seed", cfg.seed},
        {"selector", to_string(cfg.selector)},
        {"dataset",
         {{"path", cfg.dataset_path.filename().generic_string()},
          {"rows", prepared.full.rows()},
          {"features", prepared.full.cols()},
          {"classes", prepared.full.class_names()},
          {"focus_label", cfg.focus_label},
          {"focus_index", prepared.theta}}},
        {"splits", {{"train", sets.train.rows()}, {"validation", sets.validation.rows()}, {"test", sets.test.rows()}}},
        {"selection", selection},
        {"trend", trend},
    };
    return art;
}

void write_artifact(const RunArtifact& artifact, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
    write_text(out_dir / "run.json", artifact.record.dump(2) + "\n");
    std::ostringstream csv;
    metrics::write_trend_csv(artifact.trend, csv);
    write_text(out_dir / "trend.csv", csv.str());
}

json read_artifact(const fs::path& run_json) {
    std::ifstream in(run_json);
    if (!in) throw ConfigError("cannot open run artifact " + run_json.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(run_json.string() + ": " + e.what());
    }
}

ComparisonTable compare(const std::vector<json>& runs, const std::vector<std::size_t>& checkpoints) {
    if (runs.empty()) throw ConfigError("compare: no run artifacts");
    ComparisonTable table;
    table.checkpoints = checkpoints;
    try {
        const auto& ref = runs.front().at("dataset");
        for (const auto& run : runs) {
            const auto& ds = run.at("dataset");
            if (ds.at("path") != ref.at("path") || ds.at("rows") != ref.at("rows") ||
                ds.at("features") != ref.at("features") || ds.at("focus_label") != ref.at("focus_label"))
                throw ConfigError("compare: runs use different datasets or focus targets");

            std::string name = run.at("selector").get<std::string>();
            const auto dupes = std::count_if(table.columns.begin(), table.columns.end(), [&](const std::string& c) {
                return c == name || c.rfind(name + "#", 0) == 0;
            });
            if (dupes > 0) name += "#" + std::to_string(dupes + 1);
            table.columns.push_back(name);

            std::vector<std::optional<double>> col;
            for (auto f : checkpoints) {
                std::optional<double> v;
                for (const auto& row : run.at("trend"))
                    if (row.at("features").get<std::size_t>() == f) v = row.at("f1").get<double>();
                col.push_back(v);
            }
            table.f1.push_back(std::move(col));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("compare: malformed run artifact: ") + e.what());
    }
    return table;
}

std::string ComparisonTable::render() const {
    std::ostringstream out;
    out << std::setw(4) << "f";
    for (const auto& c : columns) out << std::setw(12) << c;
    out << '\n';
    for (std::size_t r = 0; r < checkpoints.size(); ++r) {
        out << std::setw(4) << checkpoints[r];
        for (const auto& col : f1) {
            if (col[r])
                out << std::setw(12) << std::fixed << std::setprecision(2) << *col[r];
            else
                out << std::setw(12) << "-";
        }
        out << '\n';
    }
    return out.str();
}

void ComparisonTable::write_csv(std::ostream& out) const {
    out << "features";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < checkpoints.size(); ++r) {
        out << checkpoints[r];
        for (const auto& col : f1) {
            out << ',';
            if (col[r]) out << std::setprecision(17) << *col[r];
        }
        out << '\n';
    }
}

}  // namespace tfs::harness
