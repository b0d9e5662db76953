#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfs/baselines.hpp"
#include "tfs/data.hpp"
#include "tfs/metrics.hpp"
#include "tfs/selector.hpp"
#include "tfs/vi_model.hpp"

namespace tfs::harness {

enum class SelectorKind { target_focused, mi, mrmr_mid, mrmr_miq, external };

std::string to_string(SelectorKind k);
SelectorKind selector_from_string(const std::string& s);

inline const std::vector<std::size_t> kDefaultCheckpoints{5, 10, 15, 20, 25};

// Mirrors the JSON config file field for field. Relative paths in the file
// are resolved against the file's directory by load_config.
struct ExperimentConfig {
    std::filesystem::path dataset_path;
    std::string target_column;
    std::string missing_token;
    std::string focus_label;
    SelectorKind selector = SelectorKind::target_focused;
    std::filesystem::path external_order;

    selector::Thresholds thresholds;
    vi::TrainConfig train;
    scoring::Weights weights;
    scoring::SimilarityMode similarity = scoring::SimilarityMode::absolute;
    data::SplitSpec split;
    double oversample_cap = 1.0;
    int confidence_draws = 300;
    baselines::MiConfig mi;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<std::size_t> checkpoints = kDefaultCheckpoints;

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct PreparedData {
    data::Dataset full;
    data::SampledSets sets;
    data::Label theta = 0;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

// Feature order for the non-TF selectors, truncated to min(budget, c).
std::vector<int> baseline_order(const ExperimentConfig& cfg, const PreparedData& prepared);

struct RunArtifact {
    nlohmann::json record;  // config echo, dataset summary, selection, trend
    metrics::TrendSeries trend;
    std::vector<int> selected;
    vi::VariationalParams final_model;  // evaluation model on the final feature set
};

RunArtifact run_experiment(const ExperimentConfig& cfg);

// Writes run.json and trend.csv into out_dir (created if needed).
void write_artifact(const RunArtifact& artifact, const std::filesystem::path& out_dir);
nlohmann::json read_artifact(const std::filesystem::path& run_json);

struct ComparisonTable {
    std::vector<std::size_t> checkpoints;
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> f1;  // [column][checkpoint]

    std::string render() const;
    void write_csv(std::ostream& out) const;
};

// F1 of every run at each checkpoint feature count. Consumes artifacts only;
// throws ConfigError when runs disagree on dataset or focus target.
ComparisonTable compare(const std::vector<nlohmann::json>& runs,
                        const std::vector<std::size_t>& checkpoints = kDefaultCheckpoints);

}  // namespace tfs::harness
