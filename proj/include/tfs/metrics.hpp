#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "tfs/data.hpp"
#include "tfs/scoring.hpp"

namespace tfs::metrics {

using data::Label;

// One-vs-rest counts with theta as the positive class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    double fp_rate() const;  // FP / (FP + TN), 0 when no negatives
    double fn_rate() const;  // FN / (FN + TP), 0 when no positives
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const Label> predictions, std::span<const Label> truth, Label theta);

// 2tp / (2tp + fp + fn), 0 when the denominator vanishes.
double f1(const ConfusionCounts& counts);

// Test-set metrics of one model, tagged with the number of features it used.
struct Evaluation {
    std::size_t feature_count = 0;
    ConfusionCounts counts;
    double fp_rate = 0.0;
    double fn_rate = 0.0;
    double f1 = 0.0;
    scoring::ConfidenceReport confidence;
};

struct TrendSeries {
    std::vector<std::size_t> features;
    std::vector<double> confidence;
    std::vector<double> confidence_var;
    std::vector<double> fp_rate;
    std::vector<double> fn_rate;
    std::vector<double> f1;

    std::size_t size() const { return features.size(); }
    bool operator==(const TrendSeries&) const = default;
};

TrendSeries assemble_trend(std::span<const Evaluation> evaluations);

// CSV with header features,confidence,confidence_var,fp_rate,fn_rate,f1.
// Reals are written in shortest round-trip form.
void write_trend_csv(const TrendSeries& trend, std::ostream& out);
TrendSeries read_trend_csv(std::istream& in);

}  // namespace tfs::metrics
