#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tfs/data.hpp"
#include "tfs/vi_model.hpp"

namespace tfs::scoring {

using data::Label;
using data::Matrix;
using data::Vector;

struct ConfidenceReport {
    double confidence_theta = 0.0;
    double variance = 0.0;  // population variance of per_sample_precisions
    std::vector<double> per_sample_precisions;
};

struct Weights {
    double confidence = 0.4;
    double cov = 0.3;
    double cos = 0.3;

    void validate() const;
};

// Whether redundancy uses |corr| / |cos| (anti-aligned features count as
// redundant) or the signed similarity.
enum class SimilarityMode { absolute, signed_value };

struct FeatureScore {
    int feature_index = -1;
    double confidence_theta = 0.0;
    double confidence_variance = 0.0;
    double cov_raw = 0.0;
    double cos_raw = 0.0;
    double cov_score = 0.0;  // normalized over the round's candidates
    double cos_score = 0.0;
    double value = 0.0;
};

// Row-wise argmax of softmax(X W + b); ties go to the lowest label.
std::vector<Label> predict_labels(const vi::PosteriorSample& sample, const Matrix& x);
std::vector<Label> predict_labels(const vi::PosteriorSample& sample, const data::Dataset& ds);

// Fraction of rows whose true label is theta that were predicted as theta.
// The quantity is a recall of theta; it is named after the formula it
// implements. Throws DataError when theta never occurs in truth.
double precision_for_target(std::span<const Label> predictions, std::span<const Label> truth, Label theta);

// Draws `draws` posterior samples and averages precision_for_target over them.
ConfidenceReport confidence(const vi::VariationalParams& params, const Matrix& x, std::span<const Label> truth,
                            Label theta, int draws, std::uint64_t seed);
ConfidenceReport confidence(const vi::VariationalParams& params, const data::Dataset& ds, Label theta, int draws,
                            std::uint64_t seed);

double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);
double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

// Raw redundancy scores: sum over selected columns g of 1 - sim(g, candidate).
// `selected` holds one selected feature per column.
double cov_score(const Eigen::Ref<const Vector>& candidate, const Matrix& selected,
                 SimilarityMode mode = SimilarityMode::absolute);
double cos_score(const Eigen::Ref<const Vector>& candidate, const Matrix& selected,
                 SimilarityMode mode = SimilarityMode::absolute);

// Min-max scaling to [0,1]; a degenerate range maps every entry to 1.
std::vector<double> normalize_scores(std::span<const double> raw);

double combine_value(double confidence_theta, double cov_score, double cos_score, const Weights& weights = {});

}  // namespace tfs::scoring
