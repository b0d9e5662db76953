#include "tfs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "tfs/errors.hpp"
#include "tfs/rng.hpp"

namespace tfs::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(std::move(cell));
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    out.push_back(std::move(cell));
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<Index> rows_of_class(const Dataset& ds, Label label) {
    std::vector<Index> out;
    for (Index i = 0; i < ds.rows(); ++i)
        if (ds.targets()[static_cast<std::size_t>(i)] == label) out.push_back(i);
    return out;
}

}  // namespace

Dataset::Dataset(Matrix values, Mask missing, std::vector<Label> targets,
                 std::vector<std::string> feature_names, std::vector<std::string> class_names)
    : values_(std::move(values)),
      missing_(std::move(missing)),
      targets_(std::move(targets)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)) {
    if (missing_.rows() != values_.rows() || missing_.cols() != values_.cols())
        throw ContractViolation("Dataset: mask shape differs from value shape");
    if (static_cast<Index>(targets_.size()) != values_.rows())
        throw ContractViolation("Dataset: target count differs from row count");
    if (static_cast<Index>(feature_names_.size()) != values_.cols())
        throw ContractViolation("Dataset: feature name count differs from column count");
    for (Label y : targets_)
        if (y < 0 || y >= num_classes())
            throw ContractViolation("Dataset: label " + std::to_string(y) + " outside class range");
    std::set<std::string_view> seen;
    for (const auto& n : feature_names_)
        if (!seen.insert(n).second) throw DataError("duplicate feature name '" + n + "'");
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes()), 0);
    for (Label y : targets_) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

bool Dataset::all_classes_present() const {
    auto counts = class_counts();
    return std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
}

Matrix Dataset::one_hot() const {
    Matrix z = Matrix::Zero(rows(), num_classes());
    for (Index i = 0; i < rows(); ++i) z(i, targets_[static_cast<std::size_t>(i)]) = 1.0;
    return z;
}

Dataset Dataset::select_rows(std::span<const Index> rows) const {
    Matrix v(static_cast<Index>(rows.size()), cols());
    Mask m(static_cast<Index>(rows.size()), cols());
    std::vector<Label> t;
    t.reserve(rows.size());
    for (Index k = 0; k < static_cast<Index>(rows.size()); ++k) {
        Index src = rows[static_cast<std::size_t>(k)];
        if (src < 0 || src >= this->rows()) throw ContractViolation("select_rows: row index out of range");
        v.row(k) = values_.row(src);
        m.row(k) = missing_.row(src);
        t.push_back(targets_[static_cast<std::size_t>(src)]);
    }
    return Dataset(std::move(v), std::move(m), std::move(t), feature_names_, class_names_);
}

Dataset Dataset::select_columns(std::span<const int> columns) const {
    Matrix v(rows(), static_cast<Index>(columns.size()));
    Mask m(rows(), static_cast<Index>(columns.size()));
    std::vector<std::string> names;
    for (Index k = 0; k < static_cast<Index>(columns.size()); ++k) {
        int src = columns[static_cast<std::size_t>(k)];
        if (src < 0 || src >= cols()) throw ContractViolation("select_columns: column index out of range");
        v.col(k) = values_.col(src);
        m.col(k) = missing_.col(src);
        names.push_back(feature_names_[static_cast<std::size_t>(src)]);
    }
    return Dataset(std::move(v), std::move(m), targets_, std::move(names), class_names_);
}

Label Dataset::label_of(std::string_view class_name) const {
    auto it = std::find(class_names_.begin(), class_names_.end(), class_name);
    if (it == class_names_.end()) throw ConfigError("unknown class label '" + std::string(class_name) + "'");
    return static_cast<Label>(it - class_names_.begin());
}

int Dataset::column_index(std::string_view feature_name) const {
    auto it = std::find(feature_names_.begin(), feature_names_.end(), feature_name);
    if (it == feature_names_.end()) throw ConfigError("unknown feature '" + std::string(feature_name) + "'");
    return static_cast<int>(it - feature_names_.begin());
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0) || !(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("split fractions must lie in (0,1)");
    if (train_fraction + test_fraction >= 1.0)
        throw ConfigError("train_fraction + test_fraction must leave a validation remainder");
}

Dataset ColumnStats::apply(const Dataset& ds) const {
    if (mean.size() != ds.cols()) throw ContractViolation("ColumnStats: column count mismatch");
    Matrix v = (ds.values().rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    return Dataset(std::move(v), ds.missing(), ds.targets(), ds.feature_names(), ds.class_names());
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 std::string_view missing_token) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    auto target_it = std::find(header.begin(), header.end(), target_column);
    if (target_it == header.end())
        throw ConfigError(path.string() + ": target column '" + std::string(target_column) + "' not found");
    const std::size_t target_idx = static_cast<std::size_t>(target_it - header.begin());

    std::vector<std::string> names;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != target_idx) names.push_back(header[j]);
    const std::size_t c = names.size();

    std::vector<double> cells;
    std::vector<char> masked;
    std::vector<std::string> raw_targets;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        auto fields = split_line(line);
        if (fields.size() != header.size())
            throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            std::string cell = trim(fields[j]);
            const bool absent = cell.empty() || cell == missing_token;
            if (j == target_idx) {
                if (absent) throw DataError(path.string() + ": row " + std::to_string(row) + " has no target");
                raw_targets.push_back(cell);
                continue;
            }
            double v = 0.0;
            if (!absent && !parse_double(cell, v))
                throw DataError(path.string() + ": row " + std::to_string(row) + ", column '" +
                                header[j] + "': cannot parse '" + cell + "'");
            cells.push_back(absent ? 0.0 : v);
            masked.push_back(absent ? 1 : 0);
        }
    }
    if (row == 0) throw DataError(path.string() + ": no data rows");

    // Class vocabulary: numeric order if every label parses, else lexicographic.
    std::set<std::string> distinct(raw_targets.begin(), raw_targets.end());
    std::vector<std::string> classes(distinct.begin(), distinct.end());
    bool numeric = std::all_of(classes.begin(), classes.end(), [](const std::string& s) {
        double v;
        return parse_double(s, v);
    });
    if (numeric) {
        std::stable_sort(classes.begin(), classes.end(), [](const std::string& a, const std::string& b) {
            double x = 0, y = 0;
            parse_double(a, x);
            parse_double(b, y);
            return x < y;
        });
    }
    std::map<std::string, Label> code;
    for (std::size_t k = 0; k < classes.size(); ++k) code[classes[k]] = static_cast<Label>(k);

    const Index r = static_cast<Index>(row);
    Matrix values(r, static_cast<Index>(c));
    Mask mask(r, static_cast<Index>(c));
    std::vector<Label> targets;
    targets.reserve(row);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < static_cast<Index>(c); ++j) {
            std::size_t k = static_cast<std::size_t>(i) * c + static_cast<std::size_t>(j);
            values(i, j) = cells[k];
            mask(i, j) = masked[k] != 0;
        }
        targets.push_back(code.at(raw_targets[static_cast<std::size_t>(i)]));
    }
    return Dataset(std::move(values), std::move(mask), std::move(targets), std::move(names), std::move(classes));
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, std::string_view target_column,
               std::string_view missing_token) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& n : ds.feature_names()) out << n << ',';
    out << target_column << '\n';
    char buf[64];
    for (Index i = 0; i < ds.rows(); ++i) {
        for (Index j = 0; j < ds.cols(); ++j) {
            if (ds.missing()(i, j)) {
                out << missing_token;
            } else {
                auto res = std::to_chars(buf, buf + sizeof(buf), ds.values()(i, j));
                out.write(buf, res.ptr - buf);
            }
            out << ',';
        }
        out << ds.class_names()[static_cast<std::size_t>(ds.targets()[static_cast<std::size_t>(i)])] << '\n';
    }
}

std::pair<Dataset, std::vector<Dataset>> impute_train_means(const Dataset& train,
                                                            const std::vector<Dataset>& others) {
    Vector means(train.cols());
    for (Index j = 0; j < train.cols(); ++j) {
        double sum = 0.0;
        Index n = 0;
        for (Index i = 0; i < train.rows(); ++i) {
            if (!train.missing()(i, j)) {
                sum += train.values()(i, j);
                ++n;
            }
        }
        if (n == 0)
            throw DataError("column '" + train.feature_names()[static_cast<std::size_t>(j)] +
                            "' has no observed values in the training split");
        means(j) = sum / static_cast<double>(n);
    }
    auto fill = [&](const Dataset& ds) {
        if (ds.cols() != train.cols()) throw ContractViolation("impute_train_means: column count mismatch");
        Matrix v = ds.values();
        for (Index j = 0; j < v.cols(); ++j)
            for (Index i = 0; i < v.rows(); ++i)
                if (ds.missing()(i, j)) v(i, j) = means(j);
        return Dataset(std::move(v), Mask::Constant(ds.rows(), ds.cols(), false), ds.targets(),
                       ds.feature_names(), ds.class_names());
    };
    std::vector<Dataset> filled;
    filled.reserve(others.size());
    for (const auto& o : others) filled.push_back(fill(o));
    return {fill(train), std::move(filled)};
}

std::pair<std::vector<Index>, std::vector<Index>> split_indices(const Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    if (dataset.rows() == 0) throw DataError("split: empty dataset");
    std::vector<Index> pool, test;
    for (Label y = 0; y < dataset.num_classes(); ++y) {
        auto members = rows_of_class(dataset, y);
        if (members.size() < 2)
            throw DataError("split: class '" + dataset.class_names()[static_cast<std::size_t>(y)] +
                            "' has fewer than 2 rows");
        Rng rng(derive_seed(spec.seed, {0x5b11u, static_cast<std::uint64_t>(y)}));
        std::shuffle(members.begin(), members.end(), rng);
        auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * spec.test_fraction));
        n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
        test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
        pool.insert(pool.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
    }
    std::sort(pool.begin(), pool.end());
    std::sort(test.begin(), test.end());
    return {std::move(pool), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
    auto [pool, test] = split_indices(dataset, spec);
    return {dataset.select_rows(pool), dataset.select_rows(test)};
}

Dataset sample_balanced(const Dataset& pool, std::size_t per_class, std::uint64_t seed) {
    if (per_class < 1) throw ContractViolation("sample_balanced: per_class must be >= 1");
    std::vector<Index> chosen;
    for (Label y = 0; y < pool.num_classes(); ++y) {
        auto members = rows_of_class(pool, y);
        if (members.empty())
            throw DataError("sample_balanced: class '" + pool.class_names()[static_cast<std::size_t>(y)] +
                            "' absent from pool");
        Rng rng(derive_seed(seed, {0xba1au, static_cast<std::uint64_t>(y)}));
        std::shuffle(members.begin(), members.end(), rng);
        if (members.size() >= per_class) {
            chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(per_class));
        } else {
            // Every row once, the shortfall drawn with replacement.
            chosen.insert(chosen.end(), members.begin(), members.end());
            std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
            for (std::size_t k = members.size(); k < per_class; ++k) chosen.push_back(members[pick(rng)]);
        }
    }
    Rng rng(derive_seed(seed, {0xba1bu}));
    std::shuffle(chosen.begin(), chosen.end(), rng);
    return pool.select_rows(chosen);
}

std::vector<std::size_t> proportional_counts(const std::vector<std::size_t>& class_counts, std::size_t n) {
    const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    const std::size_t d = class_counts.size();
    if (n > total) throw DataError("sample size exceeds pool size");
    if (n < d) throw DataError("sample size " + std::to_string(n) + " cannot represent " + std::to_string(d) + " classes");

    std::vector<std::size_t> out(d);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < d; ++k) {
        double exact = static_cast<double>(class_counts[k]) * static_cast<double>(n) / static_cast<double>(total);
        out[k] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[k];
        remainders.emplace_back(exact - std::floor(exact), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[remainders[k % d].second];

    // Every class keeps at least one row; the donor is the largest class.
    for (std::size_t k = 0; k < d; ++k) {
        if (out[k] > 0 || class_counts[k] == 0) continue;
        auto donor = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
        --out[donor];
        ++out[k];
    }
    return out;
}

std::vector<Index> sample_faithful_indices(const Dataset& pool, std::size_t n, std::uint64_t seed) {
    auto counts = proportional_counts(pool.class_counts(), n);
    std::vector<Index> chosen;
    for (Label y = 0; y < pool.num_classes(); ++y) {
        auto members = rows_of_class(pool, y);
        Rng rng(derive_seed(seed, {0xfa17u, static_cast<std::uint64_t>(y)}));
        std::shuffle(members.begin(), members.end(), rng);
        chosen.insert(chosen.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(counts[static_cast<std::size_t>(y)]));
    }
    Rng rng(derive_seed(seed, {0xfa18u}));
    std::shuffle(chosen.begin(), chosen.end(), rng);
    return chosen;
}

Dataset sample_faithful(const Dataset& pool, std::size_t n, std::uint64_t seed) {
    return pool.select_rows(sample_faithful_indices(pool, n, seed));
}

ColumnStats fit_standardizer(const Dataset& train) {
    ColumnStats stats;
    const double n = static_cast<double>(train.rows());
    stats.mean = train.values().colwise().mean().transpose();
    stats.scale = Vector::Ones(train.cols());
    for (Index j = 0; j < train.cols(); ++j) {
        double var = (train.values().col(j).array() - stats.mean(j)).square().sum() / n;
        double sd = std::sqrt(var);
        if (sd > 1e-12 * std::max(1.0, std::abs(stats.mean(j)))) stats.scale(j) = sd;
    }
    return stats;
}

std::tuple<Dataset, std::vector<Dataset>, ColumnStats> standardize(const Dataset& train,
                                                                    const std::vector<Dataset>& others) {
    ColumnStats stats = fit_standardizer(train);
    std::vector<Dataset> out;
    out.reserve(others.size());
    for (const auto& o : others) out.push_back(stats.apply(o));
    return {stats.apply(train), std::move(out), std::move(stats)};
}

SampledSets prepare(const Dataset& dataset, const PrepareOptions& options) {
    if (!(options.oversample_cap > 0.0)) throw ConfigError("oversample_cap must be positive");
    auto [pool_idx, test_idx] = split_indices(dataset, options.split);
    auto [pool, rest] = impute_train_means(dataset.select_rows(pool_idx), {dataset.select_rows(test_idx)});
    Dataset test = std::move(rest.front());

    const double val_share = options.split.validation_fraction() / (1.0 - options.split.test_fraction);
    auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(pool.rows()) * val_share));
    n_val = std::max<std::size_t>(n_val, static_cast<std::size_t>(pool.num_classes()));
    auto val_idx = sample_faithful_indices(pool, n_val, derive_seed(options.split.seed, {0x7a1u}));
    Dataset validation = pool.select_rows(val_idx);

    std::vector<char> taken(static_cast<std::size_t>(pool.rows()), 0);
    for (Index i : val_idx) taken[static_cast<std::size_t>(i)] = 1;
    std::vector<Index> remaining;
    for (Index i = 0; i < pool.rows(); ++i)
        if (!taken[static_cast<std::size_t>(i)]) remaining.push_back(i);
    Dataset train_pool = pool.select_rows(remaining);

    auto counts = train_pool.class_counts();
    auto min_count = *std::min_element(counts.begin(), counts.end());
    if (min_count == 0) throw DataError("a class has no rows left for training after the validation draw");
    auto per_class = static_cast<std::size_t>(std::floor(static_cast<double>(min_count) * options.oversample_cap));
    Dataset train = sample_balanced(train_pool, std::max<std::size_t>(per_class, 1),
                                    derive_seed(options.split.seed, {0xba1u}));

    auto [train_std, others, stats] = standardize(train, {validation, test});
    return SampledSets{std::move(train_std), std::move(others[0]), std::move(others[1])};
}

}  // namespace tfs::data
