#pragma once

// Synthetic datasets shared by the unit and acceptance suites.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tfs/data.hpp"

namespace tfs::testing {

using data::Dataset;
using data::Label;
using data::Mask;
using data::Matrix;

inline std::vector<std::string> default_names(Eigen::Index c, const std::string& prefix = "f") {
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < c; ++j) names.push_back(prefix + std::to_string(j));
    return names;
}

inline std::vector<std::string> default_classes(int d) {
    std::vector<std::string> out;
    for (int k = 0; k < d; ++k) out.push_back(std::to_string(k));
    return out;
}

inline Dataset make_dataset(Matrix x, std::vector<Label> y, int d) {
    const auto r = x.rows(), c = x.cols();
    return Dataset(std::move(x), Mask::Constant(r, c, false), std::move(y), default_names(c), default_classes(d));
}

// Labels cycle through counts[k] copies of class k; features are noise.
inline Dataset labelled_noise(const std::vector<std::size_t>& counts, Eigen::Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<Label> y;
    for (std::size_t k = 0; k < counts.size(); ++k) y.insert(y.end(), counts[k], static_cast<Label>(k));
    Matrix x(static_cast<Eigen::Index>(y.size()), c);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < c; ++j) x(i, j) = normal(rng);
    return make_dataset(std::move(x), std::move(y), static_cast<int>(counts.size()));
}

// d Gaussian blobs; the first `informative` columns carry class means
// spaced `separation` apart, the rest are pure noise.
inline Dataset blobs(std::size_t per_class, int d, Eigen::Index informative, Eigen::Index noise_cols,
                     double separation, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const Eigen::Index c = informative + noise_cols;
    Matrix x(static_cast<Eigen::Index>(per_class) * d, c);
    std::vector<Label> y;
    for (int k = 0; k < d; ++k) {
        for (std::size_t n = 0; n < per_class; ++n) {
            const Eigen::Index i = static_cast<Eigen::Index>(y.size());
            for (Eigen::Index j = 0; j < c; ++j) {
                double centre = 0.0;
                if (j < informative) centre = ((k + j) % d == 0 ? 1.0 : 0.0) * separation;
                x(i, j) = centre + normal(rng);
            }
            y.push_back(k);
        }
    }
    return make_dataset(std::move(x), std::move(y), d);
}

// Same dataset for train/validation/test, which keeps selector tests small.
inline data::SampledSets same_sets(const Dataset& ds) { return {ds, ds, ds}; }

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("tfs_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path write(const std::string& name, const std::string& text) const {
        auto p = path / name;
        std::ofstream(p) << text;
        return p;
    }
};

}  // namespace tfs::testing
