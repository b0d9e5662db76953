#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>

#include <Eigen/Dense>
#include <json.hpp>

#include "tfs/data.hpp"
#include "tfs/rng.hpp"

// Mean-field Gaussian variational Bayesian linear model.
//
// Likelihood: each one-hot target row z_n ~ N(x_n^T W + b, noise_var * I).
// Priors: every entry of W and b is standard normal. The posterior
// q(W, b) factorizes over entries, each N(mean, exp(log_sd)^2).
namespace tfs::vi {

using data::Index;
using data::Matrix;
using data::Vector;

inline constexpr double kLogSdMin = -8.0;
inline constexpr double kLogSdMax = 3.0;

struct VariationalParams {
    Matrix w_mean;    // c x d
    Matrix w_log_sd;  // c x d
    Vector b_mean;    // d
    Vector b_log_sd;  // d

    // Zero means, every sd equal to exp(log_sd).
    static VariationalParams initial(Index features, Index targets, double log_sd = std::log(0.1));

    Index features() const { return w_mean.rows(); }
    Index targets() const { return w_mean.cols(); }
    // Number of scalar weights sampled per draw (c*d + d).
    Index weight_count() const { return w_mean.size() + b_mean.size(); }

    void clamp_log_sd();
    bool all_finite() const;
    void check_shape(Index features, Index targets) const;
};

// Same layout as VariationalParams; entries are partial derivatives.
using ParamGradient = VariationalParams;

enum class KlMode {
    monte_carlo,  // log p(W,b) - log q(W,b) estimated from the same draws as the data term
    analytic,     // closed-form KL(q || N(0, I))
};

struct TrainConfig {
    int iterations = 500;
    double learning_rate = 0.05;
    int mc_samples = 8;
    double noise_var = 1.0;
    std::uint64_t seed = 0;
    KlMode kl_mode = KlMode::monte_carlo;

    void validate() const;
};

struct PosteriorSample {
    Matrix w;  // c x d
    Vector b;  // d
};

// Fixed standard-normal draws, one row per Monte-Carlo sample. Row layout is
// vec(W) in column-major order followed by b.
Matrix draw_noise(int samples, Index features, Index targets, Rng& rng);

struct ElboResult {
    double value = 0.0;
    ParamGradient gradient;
};

// Reparameterized Monte-Carlo ELBO and its exact gradient for the given
// noise bank. `x` is r x c, `z` is r x d (one-hot).
ElboResult elbo_with_gradient(const VariationalParams& params, const Matrix& x, const Matrix& z,
                              const TrainConfig& cfg, const Matrix& noise);

double elbo(const VariationalParams& params, const Matrix& x, const Matrix& z, const TrainConfig& cfg,
            const Matrix& noise);
ParamGradient elbo_gradient(const VariationalParams& params, const Matrix& x, const Matrix& z,
                            const TrainConfig& cfg, const Matrix& noise);

// Dataset overloads use every column and the one-hot targets.
double elbo(const VariationalParams& params, const data::Dataset& ds, const TrainConfig& cfg,
            const Matrix& noise);
ParamGradient elbo_gradient(const VariationalParams& params, const data::Dataset& ds, const TrainConfig& cfg,
                            const Matrix& noise);

// KL(q || N(0, I)) in closed form.
double kl_divergence(const VariationalParams& params);

// Called after every update with the 1-based iteration, the clamped
// parameters and the ELBO estimate of that step.
using TrainObserver = std::function<void(int, const VariationalParams&, double)>;

// Adam ascent on the ELBO (beta1 0.9, beta2 0.999) with fresh noise per step.
// Throws NumericError when the ELBO estimate stops being finite.
VariationalParams train(const Matrix& x, const Matrix& z, const TrainConfig& cfg,
                        const TrainObserver& observer = {});
VariationalParams train(const data::Dataset& ds, std::span<const int> feature_subset, const TrainConfig& cfg,
                        const TrainObserver& observer = {});

// Column subset of a dataset as a dense design matrix.
Matrix design_matrix(const data::Dataset& ds, std::span<const int> feature_subset);

PosteriorSample sample_posterior(const VariationalParams& params, Rng& rng);
PosteriorSample sample_posterior(const VariationalParams& params, std::uint64_t seed);
PosteriorSample posterior_mean(const VariationalParams& params);

nlohmann::json to_json(const VariationalParams& params);
VariationalParams params_from_json(const nlohmann::json& j);

// Binary layout (little-endian): 8-byte magic "TFSVPAR1", uint64 c, uint64 d,
// then w_mean and w_log_sd row-major, then b_mean and b_log_sd, all float64.
void write_binary(const VariationalParams& params, const std::filesystem::path& path);
VariationalParams read_binary(const std::filesystem::path& path);

}  // namespace tfs::vi
