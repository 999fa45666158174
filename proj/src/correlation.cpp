#include "wsnod/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wsnod/error.hpp"

namespace wsnod {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorCode::invalid_argument, "sample length mismatch");
    if (x.size() < 2) fail(ErrorCode::invalid_argument, "need at least two samples");
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double ss_x = 0.0, ss_y = 0.0, ss_xy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        ss_x += dx * dx;
        ss_y += dy * dy;
        ss_xy += dx * dy;
    }
    if (ss_x == 0.0 || ss_y == 0.0) return 0.0;
    return std::clamp(ss_xy / std::sqrt(ss_x * ss_y), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        // positions i..j (0-based) share rank ((i+1)+(j+1))/2
        double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double distance_correlation(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);

    // Row means of |x_i - x_j| and |y_i - y_j|; the matrices are symmetric so these are also column means.
    std::vector<double> row_x(n, 0.0), row_y(n, 0.0);
    double grand_x = 0.0, grand_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            row_x[i] += std::abs(x[i] - x[j]);
            row_y[i] += std::abs(y[i] - y[j]);
        }
        grand_x += row_x[i];
        grand_y += row_y[i];
        row_x[i] /= nd;
        row_y[i] /= nd;
    }
    grand_x /= nd * nd;
    grand_y /= nd * nd;

    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double a = std::abs(x[i] - x[j]) - row_x[i] - row_x[j] + grand_x;
            double b = std::abs(y[i] - y[j]) - row_y[i] - row_y[j] + grand_y;
            cov += a * b;
            var_x += a * a;
            var_y += b * b;
        }
    }
    if (var_x <= 0.0 || var_y <= 0.0) return 0.0;
    // dCov^2 / sqrt(dVar_x^2 dVar_y^2); the 1/n^2 factors cancel.
    double r2 = cov / std::sqrt(var_x * var_y);
    return std::clamp(std::sqrt(std::max(r2, 0.0)), 0.0, 1.0);
}

double zscore_correlation(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const std::size_t n = x.size();
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double ss_x = 0.0, ss_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_x += (x[i] - mx) * (x[i] - mx);
        ss_y += (y[i] - my) * (y[i] - my);
    }
    const double sd_x = std::sqrt(ss_x / static_cast<double>(n - 1));
    const double sd_y = std::sqrt(ss_y / static_cast<double>(n - 1));
    if (sd_x == 0.0 || sd_y == 0.0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ((x[i] - mx) / sd_x) * ((y[i] - my) / sd_y);
    return std::clamp(sum / static_cast<double>(n - 1), -1.0, 1.0);
}

}  // namespace wsnod
