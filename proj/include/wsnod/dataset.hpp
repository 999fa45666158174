#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wsnod/features.hpp"

namespace wsnod {

/// Column-major numeric features with binary labels; the classifiers' common input.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> columns;
    std::vector<std::uint8_t> labels;

    static Dataset from(const FeatureMatrix& matrix);

    std::size_t rows() const { return labels.size(); }
    std::size_t features() const { return columns.size(); }
    double at(std::size_t row, std::size_t feature) const { return columns[feature][row]; }
    std::vector<double> row(std::size_t r) const;

    void add_column(std::string name, std::vector<double> values);
    Dataset subset(std::span<const std::size_t> rows) const;
    std::size_t positives() const;
};

}  // namespace wsnod
