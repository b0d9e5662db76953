#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tfs::data {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Label = int;
using Index = Eigen::Index;

// Dense r x c feature matrix with a missingness mask and integer class labels
// in [0, num_classes). Immutable once built; subsets share the parent's class
// vocabulary so labels stay comparable across splits.
class Dataset {
  public:
    Dataset() = default;
    Dataset(Matrix values, Mask missing, std::vector<Label> targets,
            std::vector<std::string> feature_names, std::vector<std::string> class_names);

    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }
    int num_classes() const { return static_cast<int>(class_names_.size()); }

    const Matrix& values() const { return values_; }
    const Mask& missing() const { return missing_; }
    const std::vector<Label>& targets() const { return targets_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<std::string>& class_names() const { return class_names_; }

    bool has_missing() const { return missing_.any(); }
    std::vector<std::size_t> class_counts() const;
    bool all_classes_present() const;

    // Row-major one-hot encoding of the targets, rows() x num_classes().
    Matrix one_hot() const;

    Dataset select_rows(std::span<const Index> rows) const;
    Dataset select_columns(std::span<const int> columns) const;

    // Throws ConfigError for unknown names.
    Label label_of(std::string_view class_name) const;
    int column_index(std::string_view feature_name) const;

  private:
    Matrix values_;
    Mask missing_;
    std::vector<Label> targets_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> class_names_;
};

struct SplitSpec {
    double train_fraction = 0.6;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;

    double validation_fraction() const { return 1.0 - train_fraction - test_fraction; }
    void validate() const;
};

struct SampledSets {
    Dataset train;       // balanced
    Dataset validation;  // class proportions of the train pool
    Dataset test;
};

struct ColumnStats {
    Vector mean;
    Vector scale;  // 1 for zero-variance columns

    Dataset apply(const Dataset& ds) const;
};

// Cells equal to `missing_token` (or empty) are masked. Target values are
// re-encoded as 0..d-1 in sorted order (numeric order when every value
// parses as a number).
Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 std::string_view missing_token = "");

// Writes observed values with full round-trip precision; masked cells are
// written as `missing_token`.
void write_csv(const Dataset& ds, const std::filesystem::path& path, std::string_view target_column,
               std::string_view missing_token = "");

std::pair<Dataset, std::vector<Dataset>> impute_train_means(const Dataset& train,
                                                            const std::vector<Dataset>& others);

// Stratified partition into (train_pool, test).
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);
std::pair<std::vector<Index>, std::vector<Index>> split_indices(const Dataset& dataset,
                                                                const SplitSpec& spec);

Dataset sample_balanced(const Dataset& pool, std::size_t per_class, std::uint64_t seed);

Dataset sample_faithful(const Dataset& pool, std::size_t n, std::uint64_t seed);
// Rows chosen by sample_faithful, in output order.
std::vector<Index> sample_faithful_indices(const Dataset& pool, std::size_t n, std::uint64_t seed);

// Per-class target counts for a proportional sample of n rows (largest
// remainder rounding, at least one row per class).
std::vector<std::size_t> proportional_counts(const std::vector<std::size_t>& class_counts, std::size_t n);

ColumnStats fit_standardizer(const Dataset& train);
std::tuple<Dataset, std::vector<Dataset>, ColumnStats> standardize(const Dataset& train,
                                                                    const std::vector<Dataset>& others);

// Full preparation used by every selector: split, train-pool mean
// imputation, faithful validation draw, balanced train draw from the
// remaining pool rows, then standardization fitted on the balanced train set.
struct PrepareOptions {
    SplitSpec split;
    double oversample_cap = 1.0;
};
SampledSets prepare(const Dataset& dataset, const PrepareOptions& options);

}  // namespace tfs::data
