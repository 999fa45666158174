#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wsnod/dataset.hpp"

namespace wsnod {

inline constexpr int kDefaultKnnK = 5;

/// Min-max normalized Euclidean k-nearest-neighbors vote.
class KnnModel {
public:
    static KnnModel fit(const Dataset& train, int k = kDefaultKnnK);

    std::uint8_t predict(std::span<const double> row) const;
    std::vector<std::uint8_t> predict(const Dataset& test) const;

    int k() const { return k_; }

private:
    int k_ = kDefaultKnnK;
    std::size_t n_ = 0;
    std::vector<double> low_, span_;
    std::vector<std::vector<double>> points_;  // normalized, row-major
    std::vector<std::uint8_t> labels_;
};

std::vector<std::uint8_t> knn_fit_predict(const Dataset& train, const Dataset& test, int k = kDefaultKnnK);

inline constexpr double kNbVarianceFloor = 1e-9;

/// Gaussian naive Bayes with per-class priors and per-feature mean/variance.
class NbModel {
public:
    static NbModel fit(const Dataset& train);

    /// Unnormalized log posterior, log prior + sum of Gaussian log densities, per class.
    std::array<double, 2> log_posterior(std::span<const double> row) const;
    std::uint8_t predict(std::span<const double> row) const;
    std::vector<std::uint8_t> predict(const Dataset& test) const;

    std::array<double, 2> priors() const { return prior_; }
    const std::vector<double>& mean(int cls) const { return mean_[static_cast<std::size_t>(cls)]; }
    const std::vector<double>& variance(int cls) const { return var_[static_cast<std::size_t>(cls)]; }

private:
    std::array<double, 2> prior_{};
    std::array<std::vector<double>, 2> mean_, var_;
};

std::vector<std::uint8_t> nb_fit_predict(const Dataset& train, const Dataset& test);

}  // namespace wsnod
