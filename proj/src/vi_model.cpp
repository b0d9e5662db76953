#include "tfs/vi_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "tfs/errors.hpp"

namespace tfs::vi {

namespace {

double log_likelihood_const(Index rows, Index targets, double noise_var) {
    return -0.5 * static_cast<double>(rows * targets) * std::log(2.0 * std::numbers::pi * noise_var);
}

// Residual Z - (X W + 1 b^T).
Matrix residual(const Matrix& x, const Matrix& z, const Matrix& w, const Vector& b) {
    Matrix r = z;
    if (x.cols() > 0) r.noalias() -= x * w;
    r.rowwise() -= b.transpose();
    return r;
}

struct Adam {
    explicit Adam(const VariationalParams& like)
        : m(zeros_like(like)), v(zeros_like(like)) {}

    static VariationalParams zeros_like(const VariationalParams& p) {
        return {Matrix::Zero(p.w_mean.rows(), p.w_mean.cols()), Matrix::Zero(p.w_log_sd.rows(), p.w_log_sd.cols()),
                Vector::Zero(p.b_mean.size()), Vector::Zero(p.b_log_sd.size())};
    }

    template <typename P, typename G, typename M, typename V>
    void step_one(P& param, const G& grad, M& mom, V& var, double lr, double bc1, double bc2) const {
        mom = kBeta1 * mom + (1.0 - kBeta1) * grad;
        var = kBeta2 * var + (1.0 - kBeta2) * grad.cwiseProduct(grad);
        param.array() += lr * (mom.array() / bc1) / ((var.array() / bc2).sqrt() + kEps);
    }

    // Ascent step.
    void step(VariationalParams& p, const ParamGradient& g, double lr) {
        ++t;
        const double bc1 = 1.0 - std::pow(kBeta1, t);
        const double bc2 = 1.0 - std::pow(kBeta2, t);
        step_one(p.w_mean, g.w_mean, m.w_mean, v.w_mean, lr, bc1, bc2);
        step_one(p.w_log_sd, g.w_log_sd, m.w_log_sd, v.w_log_sd, lr, bc1, bc2);
        step_one(p.b_mean, g.b_mean, m.b_mean, v.b_mean, lr, bc1, bc2);
        step_one(p.b_log_sd, g.b_log_sd, m.b_log_sd, v.b_log_sd, lr, bc1, bc2);
    }

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    VariationalParams m, v;
    int t = 0;
};

void put_matrix_row_major(std::ofstream& out, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
}

void get_matrix_row_major(std::ifstream& in, Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            double v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            m(i, j) = v;
        }
}

nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Index rows, Index cols) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows) throw ConfigError("model JSON: bad matrix shape");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ConfigError("model JSON: bad matrix shape");
        for (Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

}  // namespace

VariationalParams VariationalParams::initial(Index features, Index targets, double log_sd) {
    return {Matrix::Zero(features, targets), Matrix::Constant(features, targets, log_sd), Vector::Zero(targets),
            Vector::Constant(targets, log_sd)};
}

void VariationalParams::clamp_log_sd() {
    w_log_sd = w_log_sd.cwiseMax(kLogSdMin).cwiseMin(kLogSdMax);
    b_log_sd = b_log_sd.cwiseMax(kLogSdMin).cwiseMin(kLogSdMax);
}

bool VariationalParams::all_finite() const {
    return w_mean.allFinite() && w_log_sd.allFinite() && b_mean.allFinite() && b_log_sd.allFinite();
}

void VariationalParams::check_shape(Index features, Index targets) const {
    if (w_mean.rows() != features || w_mean.cols() != targets || w_log_sd.rows() != features ||
        w_log_sd.cols() != targets || b_mean.size() != targets || b_log_sd.size() != targets)
        throw ContractViolation("variational parameters do not match a " + std::to_string(features) + "x" +
                                std::to_string(targets) + " model");
}

void TrainConfig::validate() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(noise_var > 0.0)) throw ConfigError("noise_var must be positive");
}

Matrix draw_noise(int samples, Index features, Index targets, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix eps(samples, features * targets + targets);
    for (Index s = 0; s < eps.rows(); ++s)
        for (Index k = 0; k < eps.cols(); ++k) eps(s, k) = normal(rng);
    return eps;
}

ElboResult elbo_with_gradient(const VariationalParams& params, const Matrix& x, const Matrix& z,
                              const TrainConfig& cfg, const Matrix& noise) {
    const Index c = x.cols();
    const Index d = z.cols();
    if (x.rows() != z.rows()) throw ContractViolation("elbo: X and Z row counts differ");
    params.check_shape(c, d);
    if (noise.rows() < 1 || noise.cols() != c * d + d) throw ContractViolation("elbo: noise bank has wrong shape");

    const Index s_count = noise.rows();
    const double inv_var = 1.0 / cfg.noise_var;
    const double ll_const = log_likelihood_const(x.rows(), d, cfg.noise_var);
    const bool mc_kl = cfg.kl_mode == KlMode::monte_carlo;

    const Matrix w_sd = params.w_log_sd.array().exp().matrix();
    const Vector b_sd = params.b_log_sd.array().exp().matrix();

    ElboResult out;
    out.gradient = Adam::zeros_like(params);
    auto& g = out.gradient;
    double total = 0.0;

    for (Index s = 0; s < s_count; ++s) {
        Eigen::Map<const Matrix, 0, Eigen::InnerStride<>> eps_w(noise.data() + s, c, d,
                                                                Eigen::InnerStride<>(noise.rows()));
        Eigen::Map<const Vector, 0, Eigen::InnerStride<>> eps_b(noise.data() + s + c * d * noise.rows(), d,
                                                                Eigen::InnerStride<>(noise.rows()));
        const Matrix w = params.w_mean + w_sd.cwiseProduct(Matrix(eps_w));
        const Vector b = params.b_mean + b_sd.cwiseProduct(Vector(eps_b));

        const Matrix r = residual(x, z, w, b);
        double value = ll_const - 0.5 * inv_var * r.squaredNorm();

        // d(log-likelihood)/dW and /db at the drawn weights.
        Matrix dw = Matrix::Zero(c, d);
        if (c > 0) dw.noalias() = inv_var * (x.transpose() * r);
        Vector db = inv_var * r.colwise().sum().transpose();

        if (mc_kl) {
            // log p(w) - log q(w) with w = mean + sd * eps: the 2*pi terms cancel
            // and log q reduces to -log_sd - eps^2/2.
            value += -0.5 * (w.squaredNorm() + b.squaredNorm()) + params.w_log_sd.sum() +
                     params.b_log_sd.sum() + 0.5 * (Matrix(eps_w).squaredNorm() + Vector(eps_b).squaredNorm());
            dw -= w;
            db -= b;
        }

        g.w_mean += dw;
        g.b_mean += db;
        g.w_log_sd += dw.cwiseProduct(Matrix(eps_w)).cwiseProduct(w_sd);
        g.b_log_sd += db.cwiseProduct(Vector(eps_b)).cwiseProduct(b_sd);
        total += value;
    }

    const double inv_s = 1.0 / static_cast<double>(s_count);
    out.value = total * inv_s;
    g.w_mean *= inv_s;
    g.w_log_sd *= inv_s;
    g.b_mean *= inv_s;
    g.b_log_sd *= inv_s;

    if (mc_kl) {
        // d(-log q)/d(log_sd) = +1 for every entry.
        g.w_log_sd.array() += 1.0;
        g.b_log_sd.array() += 1.0;
    } else {
        out.value -= kl_divergence(params);
        g.w_mean -= params.w_mean;
        g.b_mean -= params.b_mean;
        g.w_log_sd.array() -= (2.0 * params.w_log_sd.array()).exp() - 1.0;
        g.b_log_sd.array() -= (2.0 * params.b_log_sd.array()).exp() - 1.0;
    }
    return out;
}

double elbo(const VariationalParams& params, const Matrix& x, const Matrix& z, const TrainConfig& cfg,
            const Matrix& noise) {
    return elbo_with_gradient(params, x, z, cfg, noise).value;
}

ParamGradient elbo_gradient(const VariationalParams& params, const Matrix& x, const Matrix& z,
                            const TrainConfig& cfg, const Matrix& noise) {
    return elbo_with_gradient(params, x, z, cfg, noise).gradient;
}

double elbo(const VariationalParams& params, const data::Dataset& ds, const TrainConfig& cfg,
            const Matrix& noise) {
    return elbo(params, ds.values(), ds.one_hot(), cfg, noise);
}

ParamGradient elbo_gradient(const VariationalParams& params, const data::Dataset& ds, const TrainConfig& cfg,
                            const Matrix& noise) {
    return elbo_gradient(params, ds.values(), ds.one_hot(), cfg, noise);
}

double kl_divergence(const VariationalParams& params) {
    auto term = [](const auto& mean, const auto& log_sd) {
        return (0.5 * ((2.0 * log_sd.array()).exp() + mean.array().square() - 1.0) - log_sd.array()).sum();
    };
    return term(params.w_mean, params.w_log_sd) + term(params.b_mean, params.b_log_sd);
}

Matrix design_matrix(const data::Dataset& ds, std::span<const int> feature_subset) {
    Matrix x(ds.rows(), static_cast<Index>(feature_subset.size()));
    for (Index k = 0; k < x.cols(); ++k) {
        int col = feature_subset[static_cast<std::size_t>(k)];
        if (col < 0 || col >= ds.cols()) throw ContractViolation("feature index out of range");
        x.col(k) = ds.values().col(col);
    }
    return x;
}

VariationalParams train(const Matrix& x, const Matrix& z, const TrainConfig& cfg, const TrainObserver& observer) {
    cfg.validate();
    auto params = VariationalParams::initial(x.cols(), z.cols());
    Adam adam(params);
    Rng rng(cfg.seed);
    for (int it = 1; it <= cfg.iterations; ++it) {
        Matrix noise = draw_noise(cfg.mc_samples, x.cols(), z.cols(), rng);
        auto step = elbo_with_gradient(params, x, z, cfg, noise);
        if (!std::isfinite(step.value) || !step.gradient.all_finite())
            throw NumericError("non-finite ELBO at training iteration " + std::to_string(it));
        adam.step(params, step.gradient, cfg.learning_rate);
        params.clamp_log_sd();
        if (observer) observer(it, params, step.value);
    }
    return params;
}

VariationalParams train(const data::Dataset& ds, std::span<const int> feature_subset, const TrainConfig& cfg,
                        const TrainObserver& observer) {
    return train(design_matrix(ds, feature_subset), ds.one_hot(), cfg, observer);
}

PosteriorSample sample_posterior(const VariationalParams& params, Rng& rng) {
    std::normal_distribution<double> normal;
    PosteriorSample out{Matrix(params.w_mean.rows(), params.w_mean.cols()), Vector(params.b_mean.size())};
    for (Index j = 0; j < out.w.cols(); ++j)
        for (Index i = 0; i < out.w.rows(); ++i)
            out.w(i, j) = params.w_mean(i, j) + std::exp(params.w_log_sd(i, j)) * normal(rng);
    for (Index k = 0; k < out.b.size(); ++k) out.b(k) = params.b_mean(k) + std::exp(params.b_log_sd(k)) * normal(rng);
    return out;
}

PosteriorSample sample_posterior(const VariationalParams& params, std::uint64_t seed) {
    Rng rng(seed);
    return sample_posterior(params, rng);
}

PosteriorSample posterior_mean(const VariationalParams& params) { return {params.w_mean, params.b_mean}; }

nlohmann::json to_json(const VariationalParams& params) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"features", params.features()},
            {"targets", params.targets()},
            {"w_mean", matrix_json(params.w_mean)},
            {"w_log_sd", matrix_json(params.w_log_sd)},
            {"b_mean", vec(params.b_mean)},
            {"b_log_sd", vec(params.b_log_sd)}};
}

VariationalParams params_from_json(const nlohmann::json& j) {
    const auto c = j.at("features").get<Index>();
    const auto d = j.at("targets").get<Index>();
    auto vec = [d](const nlohmann::json& a) {
        auto v = a.get<std::vector<double>>();
        if (static_cast<Index>(v.size()) != d) throw ConfigError("model JSON: bad vector length");
        return Vector(Eigen::Map<const Vector>(v.data(), d));
    };
    return {matrix_from_json(j.at("w_mean"), c, d), matrix_from_json(j.at("w_log_sd"), c, d), vec(j.at("b_mean")),
            vec(j.at("b_log_sd"))};
}

static_assert(std::endian::native == std::endian::little, "binary model format assumes little-endian hosts");

void write_binary(const VariationalParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write("TFSVPAR1", 8);
    std::uint64_t c = static_cast<std::uint64_t>(params.features());
    std::uint64_t d = static_cast<std::uint64_t>(params.targets());
    out.write(reinterpret_cast<const char*>(&c), sizeof c);
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    put_matrix_row_major(out, params.w_mean);
    put_matrix_row_major(out, params.w_log_sd);
    put_matrix_row_major(out, params.b_mean.transpose());
    put_matrix_row_major(out, params.b_log_sd.transpose());
}

VariationalParams read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "TFSVPAR1", 8) != 0) throw DataError(path.string() + ": not a model file");
    std::uint64_t c = 0, d = 0;
    in.read(reinterpret_cast<char*>(&c), sizeof c);
    in.read(reinterpret_cast<char*>(&d), sizeof d);
    auto p = VariationalParams::initial(static_cast<Index>(c), static_cast<Index>(d));
    get_matrix_row_major(in, p.w_mean);
    get_matrix_row_major(in, p.w_log_sd);
    Matrix bm(1, static_cast<Index>(d)), bs(1, static_cast<Index>(d));
    get_matrix_row_major(in, bm);
    get_matrix_row_major(in, bs);
    if (!in) throw DataError(path.string() + ": truncated model file");
    p.b_mean = bm.transpose();
    p.b_log_sd = bs.transpose();
    return p;
}

}  // namespace tfs::vi
