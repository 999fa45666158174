#include "wsnod/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wsnod/error.hpp"

namespace wsnod {

KnnModel KnnModel::fit(const Dataset& train, int k) {
    if (train.rows() == 0) fail(ErrorCode::invalid_argument, "kNN needs training rows");
    if (k < 1 || k % 2 == 0) fail(ErrorCode::invalid_argument, "kNN k must be odd and >= 1");
    if (static_cast<std::size_t>(k) > train.rows()) fail(ErrorCode::invalid_argument, "kNN k exceeds training size");

    KnnModel m;
    m.k_ = k;
    m.n_ = train.rows();
    const std::size_t p = train.features();
    m.low_.resize(p);
    m.span_.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        auto [lo, hi] = std::minmax_element(train.columns[j].begin(), train.columns[j].end());
        if (!std::isfinite(*lo) || !std::isfinite(*hi)) fail(ErrorCode::invalid_argument, "non-finite kNN feature");
        m.low_[j] = *lo;
        m.span_[j] = *hi - *lo;
    }
    m.points_.assign(train.rows(), std::vector<double>(p));
    for (std::size_t r = 0; r < train.rows(); ++r) {
        for (std::size_t j = 0; j < p; ++j) {
            m.points_[r][j] = m.span_[j] > 0.0 ? (train.at(r, j) - m.low_[j]) / m.span_[j] : 0.0;
        }
    }
    m.labels_ = train.labels;
    return m;
}

std::uint8_t KnnModel::predict(std::span<const double> row) const {
    const std::size_t p = low_.size();
    std::vector<double> q(p);
    for (std::size_t j = 0; j < p; ++j) q[j] = span_[j] > 0.0 ? (row[j] - low_[j]) / span_[j] : 0.0;

    // Squared distance orders the same as Euclidean; index breaks ties.
    std::vector<std::pair<double, std::size_t>> dist(n_);
    for (std::size_t r = 0; r < n_; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            double d = points_[r][j] - q[j];
            s += d * d;
        }
        dist[r] = {s, r};
    }
    const auto kk = static_cast<std::size_t>(k_);
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk - 1), dist.end());
    std::size_t ones = 0;
    for (std::size_t i = 0; i < kk; ++i) ones += labels_[dist[i].second];
    return 2 * ones > kk ? 1 : 0;
}

std::vector<std::uint8_t> KnnModel::predict(const Dataset& test) const {
    std::vector<std::uint8_t> out(test.rows());
    for (std::size_t r = 0; r < test.rows(); ++r) out[r] = predict(test.row(r));
    return out;
}

std::vector<std::uint8_t> knn_fit_predict(const Dataset& train, const Dataset& test, int k) {
    return KnnModel::fit(train, k).predict(test);
}

NbModel NbModel::fit(const Dataset& train) {
    const std::size_t n = train.rows();
    const std::size_t p = train.features();
    const std::size_t ones = train.positives();
    if (ones == 0 || ones == n) fail(ErrorCode::degenerate_labels, "naive Bayes needs both classes");

    NbModel m;
    const std::array<double, 2> counts{static_cast<double>(n - ones), static_cast<double>(ones)};
    m.prior_ = {counts[0] / static_cast<double>(n), counts[1] / static_cast<double>(n)};
    for (int c = 0; c < 2; ++c) {
        m.mean_[c].assign(p, 0.0);
        m.var_[c].assign(p, 0.0);
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t r = 0; r < n; ++r) m.mean_[train.labels[r]][j] += train.at(r, j);
        for (int c = 0; c < 2; ++c) m.mean_[c][j] /= counts[c];
        for (std::size_t r = 0; r < n; ++r) {
            double d = train.at(r, j) - m.mean_[train.labels[r]][j];
            m.var_[train.labels[r]][j] += d * d;
        }
        for (int c = 0; c < 2; ++c) m.var_[c][j] = std::max(m.var_[c][j] / counts[c], kNbVarianceFloor);
    }
    return m;
}

std::array<double, 2> NbModel::log_posterior(std::span<const double> row) const {
    std::array<double, 2> lp{};
    for (int c = 0; c < 2; ++c) {
        double s = std::log(prior_[c]);
        for (std::size_t j = 0; j < row.size(); ++j) {
            double d = row[j] - mean_[c][j];
            s += -0.5 * std::log(2.0 * std::numbers::pi * var_[c][j]) - d * d / (2.0 * var_[c][j]);
        }
        lp[static_cast<std::size_t>(c)] = s;
    }
    return lp;
}

std::uint8_t NbModel::predict(std::span<const double> row) const {
    auto lp = log_posterior(row);
    return lp[1] >= lp[0] ? 1 : 0;
}

std::vector<std::uint8_t> NbModel::predict(const Dataset& test) const {
    std::vector<std::uint8_t> out(test.rows());
    for (std::size_t r = 0; r < test.rows(); ++r) out[r] = predict(test.row(r));
    return out;
}

std::vector<std::uint8_t> nb_fit_predict(const Dataset& train, const Dataset& test) {
    return NbModel::fit(train).predict(test);
}

}  // namespace wsnod
