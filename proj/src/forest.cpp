#include "wsnod/forest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "wsnod/error.hpp"
#include "wsnod/numfmt.hpp"
#include "wsnod/parallel.hpp"

namespace wsnod {

double gini_impurity(double p0, double p1) {
    if (!(p0 >= 0.0 && p0 <= 1.0 && p1 >= 0.0 && p1 <= 1.0) || std::abs(p0 + p1 - 1.0) > 1e-9) {
        fail(ErrorCode::invalid_argument, "class proportions must lie in [0,1] and sum to 1");
    }
    return 1.0 - p0 * p0 - p1 * p1;
}

namespace {

constexpr double kMinGain = 1e-12;

double gini_of(double c0, double c1) {
    double n = c0 + c1;
    if (n == 0.0) return 0.0;
    double p0 = c0 / n;
    double p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const TreeParams& params, std::mt19937_64& rng,
                std::vector<TreeNode>& nodes, std::vector<double>& gini_decrease)
        : data_(data), params_(params), rng_(rng), nodes_(nodes), gini_decrease_(gini_decrease) {
        const auto p = data.features();
        mtry_ = params.mtry > 0 ? std::min<std::size_t>(static_cast<std::size_t>(params.mtry), p)
                                : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
        feature_pool_.resize(p);
    }

    void build(std::vector<std::size_t> sample) {
        root_size_ = static_cast<double>(sample.size());
        grow(std::move(sample), 0);
    }

private:
    int grow(std::vector<std::size_t> sample, int depth) {
        const int index = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        double c1 = 0.0;
        for (std::size_t r : sample) c1 += data_.labels[r];
        const double n = static_cast<double>(sample.size());
        const double c0 = n - c1;

        const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
        const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));
        Split split;
        if (!depth_capped && c0 > 0.0 && c1 > 0.0 && sample.size() >= 2 * min_leaf) {
            split = best_split(sample, c0, c1, min_leaf);
        }

        if (split.feature < 0) {
            TreeNode& leaf = nodes_[static_cast<std::size_t>(index)];
            leaf.probability = {c0 / n, c1 / n};
            leaf.leaf_class = c1 >= c0 ? 1 : 0;
            return index;
        }

        gini_decrease_[static_cast<std::size_t>(split.feature)] += (n / root_size_) * split.gain;

        const auto& column = data_.columns[static_cast<std::size_t>(split.feature)];
        std::vector<std::size_t> left, right;
        for (std::size_t r : sample) (column[r] <= split.threshold ? left : right).push_back(r);
        sample.clear();
        sample.shrink_to_fit();

        int l = grow(std::move(left), depth + 1);
        int rr = grow(std::move(right), depth + 1);
        TreeNode& node = nodes_[static_cast<std::size_t>(index)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = rr;
        return index;
    }

    Split best_split(const std::vector<std::size_t>& sample, double c0, double c1, std::size_t min_leaf) {
        // Partial Fisher-Yates draw of mtry features, scanned in ascending index for deterministic ties.
        std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
        for (std::size_t k = 0; k < mtry_; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, feature_pool_.size() - 1);
            std::swap(feature_pool_[k], feature_pool_[pick(rng_)]);
        }
        std::vector<std::size_t> chosen(feature_pool_.begin(), feature_pool_.begin() + static_cast<std::ptrdiff_t>(mtry_));
        std::sort(chosen.begin(), chosen.end());

        const double n = c0 + c1;
        const double parent = gini_of(c0, c1);
        Split best;
        values_.resize(sample.size());
        for (std::size_t f : chosen) {
            const auto& column = data_.columns[f];
            for (std::size_t i = 0; i < sample.size(); ++i) {
                values_[i] = {column[sample[i]], data_.labels[sample[i]]};
            }
            std::sort(values_.begin(), values_.end());
            double l0 = 0.0, l1 = 0.0;
            for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
                (values_[i].second ? l1 : l0) += 1.0;
                const double lo = values_[i].first;
                const double hi = values_[i + 1].first;
                if (lo == hi) continue;
                const std::size_t n_left = i + 1;
                if (n_left < min_leaf || values_.size() - n_left < min_leaf) continue;
                const double nl = static_cast<double>(n_left);
                const double nr = n - nl;
                const double child = (nl / n) * gini_of(l0, l1) + (nr / n) * gini_of(c0 - l0, c1 - l1);
                const double gain = parent - child;
                if (gain > kMinGain && gain > best.gain) {
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best = {static_cast<int>(f), mid, gain};
                }
            }
        }
        return best;
    }

    const Dataset& data_;
    const TreeParams& params_;
    std::mt19937_64& rng_;
    std::vector<TreeNode>& nodes_;
    std::vector<double>& gini_decrease_;
    std::size_t mtry_ = 1;
    double root_size_ = 1.0;
    std::vector<std::size_t> feature_pool_;
    std::vector<std::pair<double, std::uint8_t>> values_;
};

}  // namespace

DecisionTree DecisionTree::fit(const Dataset& data, std::span<const std::size_t> sample, const TreeParams& params,
                               std::mt19937_64& rng) {
    if (sample.empty()) fail(ErrorCode::invalid_argument, "cannot fit a tree on an empty sample");
    if (data.features() == 0) fail(ErrorCode::invalid_argument, "dataset has no features");
    DecisionTree tree;
    tree.gini_decrease_.assign(data.features(), 0.0);
    TreeBuilder builder(data, params, rng, tree.nodes_, tree.gini_decrease_);
    builder.build(std::vector<std::size_t>(sample.begin(), sample.end()));
    return tree;
}

void DecisionTree::write(std::ostream& out) const {
    out << "nodes " << nodes_.size() << '\n';
    for (const auto& node : nodes_) {
        if (node.is_leaf()) {
            out << "L " << static_cast<int>(node.leaf_class) << ' ' << format_real(node.probability[0]) << ' '
                << format_real(node.probability[1]) << '\n';
        } else {
            out << "S " << node.feature << ' ' << format_real(node.threshold) << ' ' << node.left << ' '
                << node.right << '\n';
        }
    }
    out << "gini";
    for (double g : gini_decrease_) out << ' ' << format_real(g);
    out << '\n';
}

namespace {

std::string next_token(std::istream& in) {
    std::string token;
    if (!(in >> token)) fail(ErrorCode::invalid_argument, "truncated forest file");
    return token;
}

void expect(std::istream& in, std::string_view word) {
    auto token = next_token(in);
    if (token != word) fail(ErrorCode::invalid_argument, "forest file: expected '" + std::string(word) + "', got '" + token + "'");
}

double next_real(std::istream& in) {
    auto token = next_token(in);
    auto v = parse_double(token);
    if (!v) fail(ErrorCode::invalid_argument, "forest file: bad number '" + token + "'");
    return *v;
}

long long next_int(std::istream& in) {
    double v = next_real(in);
    return static_cast<long long>(v);
}

}  // namespace

DecisionTree DecisionTree::read(std::istream& in, std::size_t n_features) {
    DecisionTree tree;
    expect(in, "nodes");
    const auto count = static_cast<std::size_t>(next_int(in));
    tree.nodes_.resize(count);
    for (auto& node : tree.nodes_) {
        auto kind = next_token(in);
        if (kind == "L") {
            node.leaf_class = static_cast<std::uint8_t>(next_int(in));
            node.probability[0] = next_real(in);
            node.probability[1] = next_real(in);
        } else if (kind == "S") {
            node.feature = static_cast<int>(next_int(in));
            node.threshold = next_real(in);
            node.left = static_cast<int>(next_int(in));
            node.right = static_cast<int>(next_int(in));
            if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features || node.left < 0 ||
                node.right < 0 || static_cast<std::size_t>(node.left) >= count ||
                static_cast<std::size_t>(node.right) >= count) {
                fail(ErrorCode::invalid_argument, "forest file: split node out of range");
            }
        } else {
            fail(ErrorCode::invalid_argument, "forest file: unknown node kind '" + kind + "'");
        }
    }
    expect(in, "gini");
    tree.gini_decrease_.resize(n_features);
    for (auto& g : tree.gini_decrease_) g = next_real(in);
    return tree;
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, std::uint64_t seed, std::size_t tree_index,
                                          std::mt19937_64& rng) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tree_index), 0x5eedu};
    rng.seed(seq);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = pick(rng);
    return sample;
}

Vote Forest::predict(std::span<const double> row) const {
    std::size_t ones = 0;
    for (const auto& tree : trees) ones += tree.predict(row);
    Vote v;
    const double n = static_cast<double>(trees.size());
    v.outlier_share = static_cast<double>(ones) / n;
    v.label = 2 * ones >= trees.size() ? 1 : 0;
    v.probability = v.label ? v.outlier_share : 1.0 - v.outlier_share;
    return v;
}

std::vector<std::uint8_t> Forest::predict(const Dataset& data) const {
    std::vector<std::uint8_t> out(data.rows());
    std::vector<double> row(data.features());
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = data.at(r, j);
        out[r] = predict(row).label;
    }
    return out;
}

Forest fit_forest(const Dataset& data, const ForestParams& params) {
    if (params.n_trees < 1) fail(ErrorCode::invalid_argument, "n_trees must be >= 1");
    if (data.rows() < 2) fail(ErrorCode::invalid_argument, "need at least two rows");
    if (params.tree.mtry > static_cast<int>(data.features())) {
        fail(ErrorCode::invalid_argument, "mtry exceeds the number of features");
    }
    const std::size_t positives = data.positives();
    if (positives == 0 || positives == data.rows()) {
        fail(ErrorCode::degenerate_labels, "training data holds a single class");
    }

    Forest forest;
    forest.params = params;
    forest.feature_names = data.feature_names;
    forest.n_rows = data.rows();
    const auto n_trees = static_cast<std::size_t>(params.n_trees);
    forest.trees.resize(n_trees);
    forest.oob_rows.resize(n_trees);

    parallel_for(n_trees, params.jobs, [&](std::size_t t) {
        std::mt19937_64 rng;
        auto sample = bootstrap_sample(data.rows(), params.seed, t, rng);
        std::vector<char> in_bag(data.rows(), 0);
        for (std::size_t r : sample) in_bag[r] = 1;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            if (!in_bag[r]) forest.oob_rows[t].push_back(r);
        }
        forest.trees[t] = DecisionTree::fit(data, sample, params.tree, rng);
    });
    return forest;
}

namespace {

void check_matches(const Forest& forest, const Dataset& data) {
    if (forest.n_rows != data.rows() || forest.feature_names.size() != data.features()) {
        fail(ErrorCode::invalid_argument, "forest was not trained on this matrix");
    }
}

}  // namespace

std::vector<double> oob_error_curve(const Forest& forest, const Dataset& data) {
    check_matches(forest, data);
    std::vector<std::size_t> votes(data.rows(), 0), ones(data.rows(), 0);
    std::vector<double> curve;
    std::vector<double> row(data.features());
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        for (std::size_t r : forest.oob_rows[t]) {
            for (std::size_t j = 0; j < row.size(); ++j) row[j] = data.at(r, j);
            ++votes[r];
            ones[r] += forest.trees[t].predict(row);
        }
        std::size_t counted = 0, wrong = 0;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            if (votes[r] == 0) continue;
            ++counted;
            std::uint8_t label = 2 * ones[r] >= votes[r] ? 1 : 0;
            wrong += label != data.labels[r];
        }
        curve.push_back(counted ? static_cast<double>(wrong) / static_cast<double>(counted)
                                : std::numeric_limits<double>::quiet_NaN());
    }
    return curve;
}

double oob_error(const Forest& forest, const Dataset& data) {
    auto curve = oob_error_curve(forest, data);
    if (curve.empty() || std::isnan(curve.back())) fail(ErrorCode::no_oob_rows, "every row is in every bootstrap");
    return curve.back();
}

ImportanceReport importance(const Forest& forest, const Dataset& data, std::uint64_t seed) {
    check_matches(forest, data);
    const std::size_t p = data.features();
    std::vector<double> mda(p, 0.0), mdg(p, 0.0);
    std::size_t scored_trees = 0;

    std::vector<double> permuted;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        const auto& tree = forest.trees[t];
        for (std::size_t j = 0; j < p; ++j) mdg[j] += tree.gini_decrease()[j];

        const auto& oob = forest.oob_rows[t];
        if (oob.empty()) continue;
        ++scored_trees;
        const double n_oob = static_cast<double>(oob.size());

        std::size_t correct = 0;
        for (std::size_t r : oob) {
            correct += tree.leaf_for([&](std::size_t j) { return data.at(r, j); }).leaf_class == data.labels[r];
        }
        const double base = static_cast<double>(correct) / n_oob;

        for (std::size_t j = 0; j < p; ++j) {
            permuted.resize(oob.size());
            for (std::size_t i = 0; i < oob.size(); ++i) permuted[i] = data.at(oob[i], j);
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(j)};
            std::mt19937_64 rng(seq);
            std::shuffle(permuted.begin(), permuted.end(), rng);

            std::size_t still = 0;
            for (std::size_t i = 0; i < oob.size(); ++i) {
                const std::size_t r = oob[i];
                const auto& leaf = tree.leaf_for([&](std::size_t f) { return f == j ? permuted[i] : data.at(r, f); });
                still += leaf.leaf_class == data.labels[r];
            }
            mda[j] += base - static_cast<double>(still) / n_oob;
        }
    }
    if (scored_trees == 0) fail(ErrorCode::no_oob_rows, "every row is in every bootstrap");

    ImportanceReport report;
    for (std::size_t j = 0; j < p; ++j) {
        report.features.push_back({data.feature_names[j], mda[j] / static_cast<double>(scored_trees),
                                   mdg[j] / static_cast<double>(forest.trees.size())});
    }
    return report;
}

void Forest::write(std::ostream& out) const {
    out << "wsnod-forest 1\n";
    out << "rows " << n_rows << '\n';
    out << "seed " << params.seed << '\n';
    out << "params " << params.n_trees << ' ' << params.tree.max_depth << ' ' << params.tree.min_leaf << ' '
        << params.tree.mtry << '\n';
    out << "features " << feature_names.size();
    for (const auto& name : feature_names) out << ' ' << name;
    out << '\n';
    for (std::size_t t = 0; t < trees.size(); ++t) {
        out << "tree " << t << '\n';
        out << "oob " << oob_rows[t].size();
        for (std::size_t r : oob_rows[t]) out << ' ' << r;
        out << '\n';
        trees[t].write(out);
    }
    out << "end\n";
}

Forest Forest::read(std::istream& in) {
    expect(in, "wsnod-forest");
    if (next_token(in) != "1") fail(ErrorCode::invalid_argument, "unsupported forest file version");
    Forest forest;
    expect(in, "rows");
    forest.n_rows = static_cast<std::size_t>(next_int(in));
    expect(in, "seed");
    {
        auto token = next_token(in);
        forest.params.seed = std::stoull(token);
    }
    expect(in, "params");
    forest.params.n_trees = static_cast<int>(next_int(in));
    forest.params.tree.max_depth = static_cast<int>(next_int(in));
    forest.params.tree.min_leaf = static_cast<int>(next_int(in));
    forest.params.tree.mtry = static_cast<int>(next_int(in));
    expect(in, "features");
    const auto p = static_cast<std::size_t>(next_int(in));
    for (std::size_t j = 0; j < p; ++j) forest.feature_names.push_back(next_token(in));
    if (forest.params.n_trees < 1) fail(ErrorCode::invalid_argument, "forest file: n_trees < 1");
    for (int t = 0; t < forest.params.n_trees; ++t) {
        expect(in, "tree");
        next_int(in);
        expect(in, "oob");
        const auto n_oob = static_cast<std::size_t>(next_int(in));
        std::vector<std::size_t> oob(n_oob);
        for (auto& r : oob) r = static_cast<std::size_t>(next_int(in));
        forest.oob_rows.push_back(std::move(oob));
        forest.trees.push_back(DecisionTree::read(in, p));
    }
    expect(in, "end");
    return forest;
}

}  // namespace wsnod
