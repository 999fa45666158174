#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wsnod/dataset.hpp"

namespace wsnod {

/// 1 - sum p_i^2 over a two-class distribution.
double gini_impurity(double p0, double p1);

struct TreeParams {
    int max_depth = 12;  // <= 0: unlimited
    int min_leaf = 5;
    int mtry = 0;        // <= 0: ceil(sqrt(n_features))
};

/// Internal nodes send `value <= threshold` left. Leaves carry class probabilities.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::uint8_t leaf_class = 0;
    std::array<double, 2> probability{0.0, 0.0};

    bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
public:
    /// CART on the rows listed in `sample` (repeats allowed), Gini-best splits over
    /// `mtry` features drawn from `rng` at each node.
    static DecisionTree fit(const Dataset& data, std::span<const std::size_t> sample, const TreeParams& params,
                            std::mt19937_64& rng);

    /// Leaf reached by a row whose feature j is `feature(j)`.
    template <typename FeatureAt>
    const TreeNode& leaf_for(FeatureAt&& feature) const {
        const TreeNode* node = &nodes_[0];
        while (!node->is_leaf()) {
            node = &nodes_[static_cast<std::size_t>(feature(static_cast<std::size_t>(node->feature)) <= node->threshold
                                                        ? node->left
                                                        : node->right)];
        }
        return *node;
    }

    std::uint8_t predict(std::span<const double> row) const {
        return leaf_for([&](std::size_t j) { return row[j]; }).leaf_class;
    }

    std::span<const TreeNode> nodes() const { return nodes_; }
    /// Per-feature Gini decrease, each split weighted by its share of the tree's sample.
    std::span<const double> gini_decrease() const { return gini_decrease_; }

    void write(std::ostream& out) const;
    static DecisionTree read(std::istream& in, std::size_t n_features);

private:
    std::vector<TreeNode> nodes_;  // pre-order, root first
    std::vector<double> gini_decrease_;
};

struct ForestParams {
    int n_trees = 36;
    TreeParams tree;
    std::uint64_t seed = 1;
    int jobs = 1;
};

/// Bootstrap draw (with replacement, size n) for tree `tree_index`; `rng` continues the same stream.
std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed, std::size_t tree_index,
                                          std::mt19937_64& rng);

struct Vote {
    std::uint8_t label = 0;
    double probability = 0.0;     // fraction of trees voting `label`
    double outlier_share = 0.0;   // fraction of trees voting 1
};

struct Forest {
    std::vector<DecisionTree> trees;
    std::vector<std::vector<std::size_t>> oob_rows;  // per tree, ascending
    std::vector<std::string> feature_names;
    ForestParams params;
    std::size_t n_rows = 0;

    /// Majority vote; an even split goes to class 1.
    Vote predict(std::span<const double> row) const;
    std::vector<std::uint8_t> predict(const Dataset& data) const;

    void write(std::ostream& out) const;
    static Forest read(std::istream& in);
};

Forest fit_forest(const Dataset& data, const ForestParams& params);

double oob_error(const Forest& forest, const Dataset& data);

/// OOB error of the first m trees, m = 1..n_trees; NaN where no row is out of bag yet.
std::vector<double> oob_error_curve(const Forest& forest, const Dataset& data);

struct FeatureImportance {
    std::string feature;
    double mda = 0.0;
    double mdg = 0.0;
};

struct ImportanceReport {
    std::vector<FeatureImportance> features;
};

/// MDA: mean over trees of the OOB accuracy lost when one column is permuted among that
/// tree's OOB rows. MDG: per-feature Gini decrease summed over trees / n_trees.
ImportanceReport importance(const Forest& forest, const Dataset& data, std::uint64_t seed);

}  // namespace wsnod
