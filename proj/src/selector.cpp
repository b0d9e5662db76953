#include "tfs/selector.hpp"

#include <algorithm>
#include <string_view>

#include "parallel.hpp"
#include "tfs/errors.hpp"

namespace tfs::selector {

namespace {

// FNV-1a, so per-feature seeds follow the feature's name rather than its
// column position.
std::uint64_t name_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t kCandidateTrain = 1;
constexpr std::uint64_t kCandidateConfidence = 2;
constexpr std::uint64_t kEvaluation = 3;

std::optional<StopReason> stop_condition(const Thresholds& t, std::size_t acquired, std::size_t remaining,
                                         const metrics::Evaluation& latest) {
    if (acquired >= t.budget) return StopReason::budget;
    if (t.enforce) {
        // The bias-only model predicts one class everywhere, so one of its
        // FP/FN rates is zero by construction; those clauses start at round 1.
        if (acquired > 0 && !(latest.fp_rate > t.fp)) return StopReason::fp_met;
        if (acquired > 0 && !(latest.fn_rate > t.fn)) return StopReason::fn_met;
        if (!(latest.confidence.confidence_theta < t.confidence)) return StopReason::confidence_met;
    }
    if (remaining == 0) return StopReason::exhausted;
    return std::nullopt;
}

}  // namespace

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::budget: return "budget";
        case StopReason::fp_met: return "fp_met";
        case StopReason::fn_met: return "fn_met";
        case StopReason::confidence_met: return "confidence_met";
        case StopReason::exhausted: return "exhausted";
    }
    return "unknown";
}

void Thresholds::validate() const {
    if (budget < 1) throw ConfigError("budget must be >= 1");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(fp) || !unit(fn) || !unit(confidence)) throw ConfigError("FP/FN/confidence thresholds must lie in [0,1]");
}

void SelectionConfig::validate() const {
    thresholds.validate();
    weights.validate();
    train.validate();
    if (confidence_draws < 1) throw ConfigError("confidence_draws must be >= 1");
}

TrainingCounter training_counter(const SelectionState& state) {
    TrainingCounter c;
    for (const auto& r : state.history) {
        c.candidate += r.candidate_trainings;
        c.evaluation += r.evaluation_trainings;
    }
    return c;
}

metrics::Evaluation evaluate_on_test(std::span<const int> features, const data::SampledSets& sets, Label theta,
                                     const vi::TrainConfig& train_cfg, int draws, std::uint64_t seed,
                                     vi::VariationalParams* model_out) {
    const auto& truth = sets.test.targets();
    if (std::find(truth.begin(), truth.end(), theta) == truth.end())
        throw DataError("focus target does not occur in the test set");

    vi::TrainConfig cfg = train_cfg;
    cfg.seed = derive_seed(seed, {kEvaluation, 0});
    auto params = vi::train(sets.train, features, cfg);

    const auto x_test = vi::design_matrix(sets.test, features);
    auto pred = scoring::predict_labels(vi::posterior_mean(params), x_test);

    metrics::Evaluation e;
    e.feature_count = features.size();
    e.counts = metrics::confusion(pred, truth, theta);
    e.fp_rate = e.counts.fp_rate();
    e.fn_rate = e.counts.fn_rate();
    e.f1 = metrics::f1(e.counts);
    e.confidence = scoring::confidence(params, x_test, truth, theta, draws, derive_seed(seed, {kEvaluation, 1}));
    if (model_out) *model_out = std::move(params);
    return e;
}

SelectionState run_selection(const data::SampledSets& sets, const SelectionConfig& cfg) {
    cfg.validate();
    const auto& train = sets.train;
    if (sets.validation.cols() != train.cols() || sets.test.cols() != train.cols())
        throw ContractViolation("run_selection: train/validation/test feature columns differ");
    for (const auto* ds : {&train, &sets.validation, &sets.test}) {
        const auto& t = ds->targets();
        if (std::find(t.begin(), t.end(), cfg.theta) == t.end())
            throw DataError("focus target does not occur in every split");
    }

    const int n_features = static_cast<int>(train.cols());
    std::vector<std::uint64_t> feature_tag(static_cast<std::size_t>(n_features));
    for (int f = 0; f < n_features; ++f) feature_tag[static_cast<std::size_t>(f)] = name_hash(train.feature_names()[static_cast<std::size_t>(f)]);

    SelectionState state;
    state.initial = evaluate_on_test({}, sets, cfg.theta, cfg.train, cfg.confidence_draws, derive_seed(cfg.seed, {0}));

    std::vector<char> taken(static_cast<std::size_t>(n_features), 0);
    const metrics::Evaluation* latest = &state.initial;

    for (std::size_t round = 1;; ++round) {
        const std::size_t remaining = static_cast<std::size_t>(n_features) - state.selected.size();
        if (auto reason = stop_condition(cfg.thresholds, state.selected.size(), remaining, *latest)) {
            state.stop_reason = *reason;
            break;
        }

        std::vector<int> candidates;
        for (int f = 0; f < n_features; ++f)
            if (!taken[static_cast<std::size_t>(f)]) candidates.push_back(f);

        const vi::Matrix selected_cols = vi::design_matrix(train, state.selected);
        std::vector<scoring::FeatureScore> scores(candidates.size());

        detail::parallel_for(candidates.size(), cfg.threads, [&](std::size_t k) {
            const int f = candidates[k];
            const auto tag = feature_tag[static_cast<std::size_t>(f)];
            std::vector<int> subset = state.selected;
            subset.push_back(f);

            vi::TrainConfig tc = cfg.train;
            tc.seed = derive_seed(cfg.seed, {round, tag, kCandidateTrain});
            auto params = vi::train(train, subset, tc);
            auto report = scoring::confidence(params, vi::design_matrix(sets.validation, subset),
                                              sets.validation.targets(), cfg.theta, cfg.confidence_draws,
                                              derive_seed(cfg.seed, {round, tag, kCandidateConfidence}));

            auto& s = scores[k];
            s.feature_index = f;
            s.confidence_theta = report.confidence_theta;
            s.confidence_variance = report.variance;
            s.cov_raw = scoring::cov_score(train.values().col(f), selected_cols, cfg.similarity);
            s.cos_raw = scoring::cos_score(train.values().col(f), selected_cols, cfg.similarity);
        });

        std::vector<double> cov_raw, cos_raw;
        for (const auto& s : scores) {
            cov_raw.push_back(s.cov_raw);
            cos_raw.push_back(s.cos_raw);
        }
        const auto cov_norm = scoring::normalize_scores(cov_raw);
        const auto cos_norm = scoring::normalize_scores(cos_raw);
        std::size_t best = 0;
        for (std::size_t k = 0; k < scores.size(); ++k) {
            scores[k].cov_score = cov_norm[k];
            scores[k].cos_score = cos_norm[k];
            scores[k].value = scoring::combine_value(scores[k].confidence_theta, cov_norm[k], cos_norm[k], cfg.weights);
            // Candidates are in ascending index order, so strict > keeps the lowest index on ties.
            if (scores[k].value > scores[best].value) best = k;
        }

        RoundRecord record;
        record.round_index = round;
        record.chosen_feature = scores[best].feature_index;
        record.candidate_trainings = candidates.size();
        state.selected.push_back(record.chosen_feature);
        taken[static_cast<std::size_t>(record.chosen_feature)] = 1;

        record.test = evaluate_on_test(state.selected, sets, cfg.theta, cfg.train, cfg.confidence_draws,
                                       derive_seed(cfg.seed, {round}));
        record.evaluation_trainings = 1;
        record.candidates = std::move(scores);
        state.total_trainings += record.trainings_this_round();
        state.history.push_back(std::move(record));
        latest = &state.history.back().test;
    }
    return state;
}

metrics::TrendSeries assemble_trend(const SelectionState& state) {
    std::vector<metrics::Evaluation> evals;
    evals.reserve(state.history.size());
    for (const auto& r : state.history) evals.push_back(r.test);
    return metrics::assemble_trend(evals);
}

nlohmann::json to_json(const metrics::Evaluation& e) {
    return {{"features", e.feature_count},
            {"tp", e.counts.tp},
            {"fp", e.counts.fp},
            {"tn", e.counts.tn},
            {"fn", e.counts.fn},
            {"fp_rate", e.fp_rate},
            {"fn_rate", e.fn_rate},
            {"f1", e.f1},
            {"confidence", e.confidence.confidence_theta},
            {"confidence_var", e.confidence.variance}};
}

nlohmann::json to_json(const scoring::FeatureScore& s) {
    return {{"feature", s.feature_index},      {"confidence", s.confidence_theta},
            {"confidence_var", s.confidence_variance}, {"cov_raw", s.cov_raw},
            {"cos_raw", s.cos_raw},           {"cov_score", s.cov_score},
            {"cos_score", s.cos_score},       {"value", s.value}};
}

nlohmann::json to_json(const SelectionState& state, const std::vector<std::string>& feature_names) {
    auto name = [&](int f) { return feature_names.at(static_cast<std::size_t>(f)); };
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : state.history) {
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& s : r.candidates) {
            auto j = to_json(s);
            j["name"] = name(s.feature_index);
            cands.push_back(std::move(j));
        }
        rounds.push_back({{"round", r.round_index},
                          {"chosen_feature", r.chosen_feature},
                          {"chosen_name", name(r.chosen_feature)},
                          {"candidate_trainings", r.candidate_trainings},
                          {"evaluation_trainings", r.evaluation_trainings},
                          {"test", to_json(r.test)},
                          {"candidates", std::move(cands)}});
    }
    std::vector<std::string> selected_names;
    for (int f : state.selected) selected_names.push_back(name(f));
    const auto counter = training_counter(state);
    return {{"selected", state.selected},
            {"selected_names", selected_names},
            {"stop_reason", to_string(state.stop_reason)},
            {"total_trainings", state.total_trainings},
            {"candidate_trainings", counter.candidate},
            {"evaluation_trainings", counter.evaluation},
            {"initial", to_json(state.initial)},
            {"rounds", std::move(rounds)}};
}

}  // namespace tfs::selector
