#pragma once

#include <span>
#include <vector>

namespace wsnod {

// All four take equal-length samples, n >= 2, and return 0 when either side has no spread.

/// Sample Pearson r from centered sums of squares.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson on average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Empirical distance correlation (double-centered distance matrices), in [0, 1].
double distance_correlation(std::span<const double> x, std::span<const double> y);

/// Mean product of z-scores with n-1 denominators.
double zscore_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace wsnod
