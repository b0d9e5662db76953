#include "tfs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include <boost/math/special_functions/digamma.hpp>

#include "tfs/errors.hpp"
#include "tfs/rng.hpp"
#include "tfs/selector.hpp"

namespace tfs::baselines {

namespace {

using boost::math::digamma;

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

bool is_constant(const Eigen::Ref<const Vector>& x) {
    return x.size() == 0 || x.maxCoeff() == x.minCoeff();
}

// Ranked (optionally), scaled to unit sd, plus a tiny jitter keyed by sorted
// position (ties broken by row). The jitter is antisymmetric in position, so
// a reversed column becomes the exact negation of the original and keeps
// every distance; exact copies of a column receive identical jitter.
std::vector<double> prepare_column(const Eigen::Ref<const Vector>& x, const MiConfig& cfg) {
    std::vector<double> v(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) v[static_cast<std::size_t>(i)] = x(i);
    if (cfg.rank_transform) v = average_ranks(v);
    const std::size_t count = v.size();
    const double n = static_cast<double>(count);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    const double sd = std::sqrt(ss / n);
    double mean_abs = 0.0;
    for (double& a : v) {
        a = (a - mean) / sd;
        mean_abs += std::abs(a);
    }
    mean_abs /= n;

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    const double amplitude = 1e-10 * std::max(1.0, mean_abs);
    for (std::size_t p = 0; p < count; ++p) {
        const std::size_t mirror = count - 1 - p;
        if (p == mirror) continue;
        const auto bits = derive_seed(cfg.seed, {std::min(p, mirror)});
        const double u = 0.5 + 0.5 * static_cast<double>(bits >> 11) * 0x1.0p-53;
        v[order[p]] += (p < mirror ? -amplitude : amplitude) * u;
    }
    return v;
}

// Number of entries of `sorted` strictly inside (center - radius, center + radius).
std::size_t count_within(const std::vector<double>& sorted, double center, double radius) {
    auto lo = std::upper_bound(sorted.begin(), sorted.end(), center - radius);
    auto hi = std::lower_bound(sorted.begin(), sorted.end(), center + radius);
    return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

// Distance from sorted[pos] to its k-th nearest neighbour within `sorted`.
double kth_neighbour_distance_1d(const std::vector<double>& sorted, std::size_t pos, int k) {
    std::size_t left = pos, right = pos;
    double dist = 0.0;
    for (int step = 0; step < k; ++step) {
        const bool can_left = left > 0;
        const bool can_right = right + 1 < sorted.size();
        const double dl = can_left ? sorted[pos] - sorted[left - 1] : std::numeric_limits<double>::infinity();
        const double dr = can_right ? sorted[right + 1] - sorted[pos] : std::numeric_limits<double>::infinity();
        if (dl <= dr) {
            --left;
            dist = dl;
        } else {
            ++right;
            dist = dr;
        }
    }
    return dist;
}

double ksg(const std::vector<double>& x, const std::vector<double>& y, int k) {
    const std::size_t n = x.size();
    std::vector<std::size_t> by_x(n);
    std::iota(by_x.begin(), by_x.end(), 0);
    std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs(n), ys(y);
    for (std::size_t p = 0; p < n; ++p) xs[p] = x[by_x[p]];
    std::sort(ys.begin(), ys.end());

    double acc = 0.0;
    std::priority_queue<double> heap;  // k smallest joint distances seen so far
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t i = by_x[p];
        heap = {};
        auto consider = [&](std::size_t q) {
            const std::size_t j = by_x[q];
            const double d = std::max(std::abs(x[i] - x[j]), std::abs(y[i] - y[j]));
            if (heap.size() < static_cast<std::size_t>(k)) {
                heap.push(d);
            } else if (d < heap.top()) {
                heap.pop();
                heap.push(d);
            }
        };
        // Sweep outward in x; stop a side once its x-gap alone exceeds the k-th best.
        std::size_t l = p, r = p;
        bool left_open = l > 0, right_open = r + 1 < n;
        while (left_open || right_open) {
            const bool full = heap.size() == static_cast<std::size_t>(k);
            if (left_open) {
                if (full && x[i] - xs[l - 1] > heap.top()) {
                    left_open = false;
                } else {
                    consider(--l);
                    left_open = l > 0;
                }
            }
            if (right_open) {
                if (heap.size() == static_cast<std::size_t>(k) && xs[r + 1] - x[i] > heap.top()) {
                    right_open = false;
                } else {
                    consider(++r);
                    right_open = r + 1 < n;
                }
            }
        }
        const double eps = heap.top();
        const std::size_t nx = count_within(xs, x[i], eps) - 1;
        const std::size_t ny = count_within(ys, y[i], eps) - 1;
        acc += digamma(static_cast<double>(nx) + 1.0) + digamma(static_cast<double>(ny) + 1.0);
    }
    return digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) - acc / static_cast<double>(n);
}

}  // namespace

void MiConfig::validate() const {
    if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
}

double mi_estimate(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y, const MiConfig& cfg) {
    cfg.validate();
    if (x.size() != y.size()) throw ContractViolation("mi_estimate: length mismatch");
    if (x.size() < cfg.k_neighbors + 2) throw ContractViolation("mi_estimate: need at least k+2 points");
    if (is_constant(x) || is_constant(y)) return 0.0;
    return std::max(0.0, ksg(prepare_column(x, cfg), prepare_column(y, cfg), cfg.k_neighbors));
}

double mi_estimate(const Eigen::Ref<const Vector>& x, std::span<const Label> labels, const MiConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(x.size()) != labels.size()) throw ContractViolation("mi_estimate: length mismatch");
    if (x.size() < cfg.k_neighbors + 2) throw ContractViolation("mi_estimate: need at least k+2 points");
    if (is_constant(x)) return 0.0;
    const auto v = prepare_column(x, cfg);

    std::map<Label, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    // Points whose label occurs once carry no neighbour information and are dropped.
    std::vector<std::size_t> kept;
    for (const auto& [label, rows] : members)
        if (rows.size() > 1) kept.insert(kept.end(), rows.begin(), rows.end());
    if (kept.empty()) return 0.0;
    std::vector<double> all_sorted;
    for (std::size_t i : kept) all_sorted.push_back(v[i]);
    std::sort(all_sorted.begin(), all_sorted.end());

    double sum_k = 0.0, sum_label = 0.0, sum_m = 0.0;
    for (const auto& [label, rows] : members) {
        if (rows.size() < 2) continue;
        const int k = std::min<int>(cfg.k_neighbors, static_cast<int>(rows.size()) - 1);
        std::vector<double> sorted;
        for (std::size_t i : rows) sorted.push_back(v[i]);
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t pos = 0; pos < sorted.size(); ++pos) {
            const double radius = kth_neighbour_distance_1d(sorted, pos, k);
            // Strictly closer than the k-th same-label neighbour, self included.
            const std::size_t m = count_within(all_sorted, sorted[pos], radius);
            sum_k += digamma(static_cast<double>(k));
            sum_label += digamma(static_cast<double>(rows.size()));
            sum_m += digamma(static_cast<double>(std::max<std::size_t>(m, 1)));
        }
    }
    const double n = static_cast<double>(kept.size());
    return std::max(0.0, digamma(n) + (sum_k - sum_label - sum_m) / n);
}

std::vector<double> mi_scores(const data::Dataset& ds, const MiConfig& cfg) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(ds.cols()));
    for (Eigen::Index j = 0; j < ds.cols(); ++j) out.push_back(mi_estimate(ds.values().col(j), ds.targets(), cfg));
    return out;
}

std::vector<int> mi_rank(const data::Dataset& ds, std::size_t budget, const MiConfig& cfg) {
    if (budget > static_cast<std::size_t>(ds.cols())) throw ContractViolation("mi_rank: budget exceeds feature count");
    const auto scores = mi_scores(ds, cfg);
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    order.resize(budget);
    return order;
}

std::vector<int> mrmr_select(const data::Dataset& ds, std::size_t budget, MrmrVariant variant, const MiConfig& cfg,
                             double redundancy_weight) {
    const auto c = static_cast<std::size_t>(ds.cols());
    if (budget > c) throw ContractViolation("mrmr_select: budget exceeds feature count");
    const auto relevance = mi_scores(ds, cfg);

    std::vector<int> chosen;
    std::vector<char> taken(c, 0);
    std::vector<double> redundancy_sum(c, 0.0);
    while (chosen.size() < budget) {
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < c; ++f) {
            if (taken[f]) continue;
            double score = relevance[f];
            if (!chosen.empty()) {
                const double mean_red = redundancy_sum[f] / static_cast<double>(chosen.size());
                score = variant == MrmrVariant::MID ? relevance[f] - redundancy_weight * mean_red
                                                    : relevance[f] / std::max(mean_red, kMiqRedundancyFloor);
            }
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(f);
            }
        }
        chosen.push_back(best);
        taken[static_cast<std::size_t>(best)] = 1;
        if (chosen.size() == budget) break;
        for (std::size_t f = 0; f < c; ++f)
            if (!taken[f])
                redundancy_sum[f] += mi_estimate(ds.values().col(static_cast<Eigen::Index>(f)), ds.values().col(best), cfg);
    }
    return chosen;
}

std::vector<metrics::Evaluation> evaluate_baseline(std::span<const int> order, const data::SampledSets& sets,
                                                   Label theta, const vi::TrainConfig& train_cfg, int draws,
                                                   std::uint64_t seed) {
    if (order.empty()) throw ContractViolation("evaluate_baseline: empty order");
    std::vector<metrics::Evaluation> out;
    out.reserve(order.size());
    for (std::size_t len = 1; len <= order.size(); ++len)
        out.push_back(selector::evaluate_on_test(order.first(len), sets, theta, train_cfg, draws, derive_seed(seed, {len})));
    return out;
}

std::vector<int> read_external_order(const std::filesystem::path& path, const data::Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open external order file " + path.string());
    std::vector<int> order;
    std::set<int> seen;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        auto start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        const int col = ds.column_index(line.substr(start));
        if (!seen.insert(col).second) throw ConfigError("external order lists '" + line + "' twice");
        order.push_back(col);
    }
    if (order.empty()) throw ConfigError("external order file " + path.string() + " is empty");
    return order;
}

}  // namespace tfs::baselines
