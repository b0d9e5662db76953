#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tfs/data.hpp"
#include "tfs/metrics.hpp"
#include "tfs/vi_model.hpp"

// Target-agnostic comparison selectors built on k-nearest-neighbour mutual
// information estimates.
namespace tfs::baselines {

using data::Label;
using data::Vector;

struct MiConfig {
    int k_neighbors = 3;
    std::uint64_t seed = 0;  // seeds the tie-breaking jitter
    // Replace each continuous column by its (average) ranks before the
    // neighbour search, making estimates invariant to monotone transforms.
    bool rank_transform = true;

    void validate() const;
};

enum class MrmrVariant { MID, MIQ };

// Kraskov-Stoegbauer-Grassberger estimator (first variant, max-norm) for two
// continuous columns, clipped at 0. Constant columns give 0.
double mi_estimate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y, const MiConfig& cfg = {});

// Continuous feature versus discrete labels: neighbours are searched within
// each label, then counted over all points. Clipped at 0.
double mi_estimate(const Eigen::Ref<const Vector>& x, std::span<const Label> labels, const MiConfig& cfg = {});

// Relevance of every column against the target.
std::vector<double> mi_scores(const data::Dataset& ds, const MiConfig& cfg = {});

// Columns by descending relevance (ties: lowest index), first `budget` kept.
std::vector<int> mi_rank(const data::Dataset& ds, std::size_t budget, const MiConfig& cfg = {});

inline constexpr double kMiqRedundancyFloor = 1e-12;

// Greedy mRMR. MID maximizes relevance - redundancy_weight * mean redundancy;
// MIQ maximizes relevance / max(mean redundancy, kMiqRedundancyFloor).
std::vector<int> mrmr_select(const data::Dataset& ds, std::size_t budget, MrmrVariant variant,
                             const MiConfig& cfg = {}, double redundancy_weight = 1.0);

// Evaluates every prefix of `order` with selector::evaluate_on_test, using
// the same per-feature-count seeds as the target-focused selector.
std::vector<metrics::Evaluation> evaluate_baseline(std::span<const int> order, const data::SampledSets& sets,
                                                   Label theta, const vi::TrainConfig& train_cfg, int draws,
                                                   std::uint64_t seed);

// Newline-separated feature names; blank lines are skipped.
std::vector<int> read_external_order(const std::filesystem::path& path, const data::Dataset& ds);

}  // namespace tfs::baselines
