#include "wsnod/dataset.hpp"

#include <numeric>

#include "wsnod/error.hpp"

namespace wsnod {

Dataset Dataset::from(const FeatureMatrix& matrix) {
    Dataset d;
    d.feature_names = matrix.feature_names;
    d.columns.assign(kFeatureCount, std::vector<double>(matrix.rows.size()));
    d.labels.resize(matrix.rows.size());
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
        auto f = matrix.rows[r].features();
        for (std::size_t j = 0; j < kFeatureCount; ++j) d.columns[j][r] = f[j];
        d.labels[r] = matrix.rows[r].label;
    }
    return d;
}

std::vector<double> Dataset::row(std::size_t r) const {
    std::vector<double> out(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) out[j] = columns[j][r];
    return out;
}

void Dataset::add_column(std::string name, std::vector<double> values) {
    if (values.size() != rows()) fail(ErrorCode::invalid_argument, "column length does not match row count");
    feature_names.push_back(std::move(name));
    columns.push_back(std::move(values));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset d;
    d.feature_names = feature_names;
    d.columns.assign(columns.size(), std::vector<double>(rows.size()));
    d.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) d.columns[j][i] = columns[j][rows[i]];
        d.labels[i] = labels[rows[i]];
    }
    return d;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::accumulate(labels.begin(), labels.end(), std::size_t{0}));
}

}  // namespace wsnod
