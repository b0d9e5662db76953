#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfs/data.hpp"
#include "tfs/metrics.hpp"
#include "tfs/scoring.hpp"
#include "tfs/vi_model.hpp"

// Target-focused greedy acquisition: each round trains one model per
// remaining candidate on FS + {candidate}, scores it on the validation set,
// acquires the best-valued feature and re-evaluates on the test set.
namespace tfs::selector {

using data::Label;

struct Thresholds {
    std::size_t budget = 1;
    double fp = 0.0;          // continue while fp_rate > fp
    double fn = 0.0;          // continue while fn_rate > fn
    double confidence = 1.0;  // continue while confidence < confidence
    // When false only the budget and candidate exhaustion stop the loop.
    bool enforce = true;

    static Thresholds budget_only(std::size_t budget) { return {budget, 0.0, 0.0, 1.0, false}; }
    void validate() const;
};

enum class StopReason { budget, fp_met, fn_met, confidence_met, exhausted };

std::string to_string(StopReason r);

struct SelectionConfig {
    Label theta = 0;
    Thresholds thresholds;
    scoring::Weights weights;
    scoring::SimilarityMode similarity = scoring::SimilarityMode::absolute;
    vi::TrainConfig train;  // train.seed is replaced per model by a derived seed
    int confidence_draws = 300;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const;
};

struct RoundRecord {
    std::size_t round_index = 0;  // 1-based
    int chosen_feature = -1;
    std::vector<scoring::FeatureScore> candidates;
    metrics::Evaluation test;
    std::size_t candidate_trainings = 0;
    std::size_t evaluation_trainings = 0;

    std::size_t trainings_this_round() const { return candidate_trainings + evaluation_trainings; }
};

struct SelectionState {
    std::vector<int> selected;        // acquisition order
    metrics::Evaluation initial;      // bias-only model that seeds the loop guard
    std::vector<RoundRecord> history;
    std::size_t total_trainings = 0;  // sum over history, excludes the bias-only model
    StopReason stop_reason = StopReason::budget;
};

struct TrainingCounter {
    std::size_t candidate = 0;
    std::size_t evaluation = 0;
    std::size_t total() const { return candidate + evaluation; }
};

TrainingCounter training_counter(const SelectionState& state);

// Trains on the balanced train set restricted to `features` and evaluates on
// the test set: FP/FN/F1 from posterior-mean predictions, confidence from
// `draws` posterior samples. An empty feature list gives the bias-only model.
metrics::Evaluation evaluate_on_test(std::span<const int> features, const data::SampledSets& sets, Label theta,
                                     const vi::TrainConfig& train_cfg, int draws, std::uint64_t seed,
                                     vi::VariationalParams* model_out = nullptr);

SelectionState run_selection(const data::SampledSets& sets, const SelectionConfig& cfg);

metrics::TrendSeries assemble_trend(const SelectionState& state);

nlohmann::json to_json(const metrics::Evaluation& e);
nlohmann::json to_json(const scoring::FeatureScore& s);
nlohmann::json to_json(const SelectionState& state, const std::vector<std::string>& feature_names);

}  // namespace tfs::selector
