#include "tfs/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "tfs/errors.hpp"

namespace tfs::scoring {

void Weights::validate() const {
    if (confidence < 0.0 || cov < 0.0 || cos < 0.0) throw ConfigError("score weights must be nonnegative");
}

std::vector<Label> predict_labels(const vi::PosteriorSample& sample, const Matrix& x) {
    if (x.cols() != sample.w.rows()) throw ContractViolation("predict_labels: column count differs from model");
    Matrix logits(x.rows(), sample.b.size());
    if (x.cols() > 0)
        logits.noalias() = x * sample.w;
    else
        logits.setZero();
    logits.rowwise() += sample.b.transpose();

    // softmax is strictly increasing per row, so its argmax is the logit argmax.
    std::vector<Label> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Label best = 0;
        for (Eigen::Index k = 1; k < logits.cols(); ++k)
            if (logits(i, k) > logits(i, best)) best = static_cast<Label>(k);
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

std::vector<Label> predict_labels(const vi::PosteriorSample& sample, const data::Dataset& ds) {
    return predict_labels(sample, ds.values());
}

double precision_for_target(std::span<const Label> predictions, std::span<const Label> truth, Label theta) {
    if (predictions.size() != truth.size()) throw ContractViolation("precision_for_target: length mismatch");
    std::size_t members = 0, hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] != theta) continue;
        ++members;
        if (predictions[i] == theta) ++hits;
    }
    if (members == 0) throw DataError("target " + std::to_string(theta) + " does not occur in the evaluation labels");
    return static_cast<double>(hits) / static_cast<double>(members);
}

ConfidenceReport confidence(const vi::VariationalParams& params, const Matrix& x, std::span<const Label> truth,
                            Label theta, int draws, std::uint64_t seed) {
    if (draws < 1) throw ConfigError("confidence draws must be >= 1");
    if (static_cast<Eigen::Index>(truth.size()) != x.rows()) throw ContractViolation("confidence: label count mismatch");
    Rng rng(seed);
    ConfidenceReport report;
    report.per_sample_precisions.reserve(static_cast<std::size_t>(draws));
    for (int j = 0; j < draws; ++j) {
        auto sample = vi::sample_posterior(params, rng);
        auto pred = predict_labels(sample, x);
        report.per_sample_precisions.push_back(precision_for_target(pred, truth, theta));
    }
    const double n = static_cast<double>(draws);
    double sum = 0.0;
    for (double p : report.per_sample_precisions) sum += p;
    report.confidence_theta = sum / n;
    double ss = 0.0;
    for (double p : report.per_sample_precisions) ss += (p - report.confidence_theta) * (p - report.confidence_theta);
    report.variance = ss / n;
    return report;
}

ConfidenceReport confidence(const vi::VariationalParams& params, const data::Dataset& ds, Label theta, int draws,
                            std::uint64_t seed) {
    return confidence(params, ds.values(), ds.targets(), theta, draws, seed);
}

double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    if (a.size() != b.size()) throw ContractViolation("pearson: length mismatch");
    Vector ca = a.array() - a.mean();
    Vector cb = b.array() - b.mean();
    const double na = ca.norm(), nb = cb.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(ca.dot(cb) / (na * nb), -1.0, 1.0);
}

double cosine(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    if (a.size() != b.size()) throw ContractViolation("cosine: length mismatch");
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

namespace {

template <typename Sim>
double redundancy(const Eigen::Ref<const Vector>& candidate, const Matrix& selected, SimilarityMode mode, Sim sim) {
    if (selected.cols() > 0 && selected.rows() != candidate.size())
        throw ContractViolation("redundancy score: column length mismatch");
    double total = 0.0;
    for (Eigen::Index g = 0; g < selected.cols(); ++g) {
        double s = sim(selected.col(g), candidate);
        total += 1.0 - (mode == SimilarityMode::absolute ? std::abs(s) : s);
    }
    return total;
}

}  // namespace

double cov_score(const Eigen::Ref<const Vector>& candidate, const Matrix& selected, SimilarityMode mode) {
    return redundancy(candidate, selected, mode, pearson);
}

double cos_score(const Eigen::Ref<const Vector>& candidate, const Matrix& selected, SimilarityMode mode) {
    return redundancy(candidate, selected, mode, cosine);
}

std::vector<double> normalize_scores(std::span<const double> raw) {
    if (raw.empty()) throw ContractViolation("normalize_scores: empty cohort");
    auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double min = *lo, max = *hi;
    std::vector<double> out(raw.size(), 1.0);
    if (max == min) return out;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - min) / (max - min);
    return out;
}

double combine_value(double confidence_theta, double cov, double cos, const Weights& weights) {
    return weights.confidence * confidence_theta + weights.cov * cov + weights.cos * cos;
}

}  // namespace tfs::scoring
