#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include "support.hpp"
#include "wsnod/dataset.hpp"
#include "wsnod/forest.hpp"

using namespace wsnod;
using wsnod::test::error_of;
using wsnod::test::Gen;

namespace {

Dataset make_dataset(std::vector<std::vector<double>> columns, std::vector<std::uint8_t> labels) {
    Dataset d;
    for (std::size_t j = 0; j < columns.size(); ++j) d.feature_names.push_back("x" + std::to_string(j));
    d.columns = std::move(columns);
    d.labels = std::move(labels);
    return d;
}

// Two informative columns with overlapping classes plus one noise column.
Dataset noisy_blobs(std::size_t n, std::uint64_t seed) {
    Gen gen(seed);
    std::vector<std::vector<double>> cols(3);
    std::vector<std::uint8_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t y = gen.real(0, 1) < 0.3;
        labels.push_back(y);
        cols[0].push_back(gen.normal() + 1.5 * y);
        cols[1].push_back(gen.normal() - 1.0 * y);
        cols[2].push_back(gen.normal());
    }
    return make_dataset(std::move(cols), std::move(labels));
}

DecisionTree tree_from_text(const std::string& text, std::size_t p) {
    std::istringstream in(text);
    return DecisionTree::read(in, p);
}

// Reference CART: exhaustive Gini search over every feature, written from the split rules alone.
struct RefNode {
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<RefNode> left, right;
    int label = 0;
};

double gini_counts(double c0, double c1) {
    double n = c0 + c1;
    return n == 0.0 ? 0.0 : 1.0 - (c0 / n) * (c0 / n) - (c1 / n) * (c1 / n);
}

std::unique_ptr<RefNode> ref_grow(const Dataset& d, const std::vector<std::size_t>& rows, std::size_t min_leaf) {
    auto node = std::make_unique<RefNode>();
    double c1 = 0;
    for (auto r : rows) c1 += d.labels[r];
    const double n = static_cast<double>(rows.size());
    const double c0 = n - c1;
    node->label = c1 >= c0 ? 1 : 0;
    if (c0 == 0 || c1 == 0 || rows.size() < 2 * min_leaf) return node;

    double best_gain = 0.0;
    for (std::size_t f = 0; f < d.features(); ++f) {
        std::set<double> uniq;
        for (auto r : rows) uniq.insert(d.at(r, f));
        for (auto it = uniq.begin(); std::next(it) != uniq.end(); ++it) {
            const double lo = *it, hi = *std::next(it);
            double l0 = 0, l1 = 0;
            for (auto r : rows) {
                if (d.at(r, f) <= lo) (d.labels[r] ? l1 : l0) += 1;
            }
            const double nl = l0 + l1, nr = n - nl;
            if (nl < static_cast<double>(min_leaf) || nr < static_cast<double>(min_leaf)) continue;
            const double gain =
                gini_counts(c0, c1) - ((nl / n) * gini_counts(l0, l1) + (nr / n) * gini_counts(c0 - l0, c1 - l1));
            if (gain > 1e-12 && gain > best_gain) {
                best_gain = gain;
                node->feature = static_cast<int>(f);
                node->threshold = lo + (hi - lo) / 2.0;
            }
        }
    }
    if (node->feature < 0) return node;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (d.at(r, static_cast<std::size_t>(node->feature)) <= node->threshold ? left : right).push_back(r);
    node->left = ref_grow(d, left, min_leaf);
    node->right = ref_grow(d, right, min_leaf);
    return node;
}

int ref_predict(const RefNode& node, const std::vector<double>& row) {
    if (node.feature < 0) return node.label;
    return ref_predict(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? *node.left : *node.right, row);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

}  // namespace

TEST_CASE("gini impurity") {
    CHECK(gini_impurity(1.0, 0.0) == 0.0);
    CHECK(gini_impurity(0.5, 0.5) == 0.5);
    CHECK(gini_impurity(0.9, 0.1) == doctest::Approx(0.18).epsilon(1e-15));
    CHECK(error_of([] { gini_impurity(0.7, 0.7); }) == "invalid_argument");
}

TEST_CASE("separable data is learned exactly") {
    Gen gen(51);
    std::vector<std::vector<double>> cols(2);
    std::vector<std::uint8_t> labels;
    for (int i = 0; i < 200; ++i) {
        double x = gen.real(-1, 1);
        cols[0].push_back(x);
        cols[1].push_back(gen.real(-1, 1));
        labels.push_back(x > 0.1);
    }
    Dataset d = make_dataset(cols, labels);
    ForestParams p;
    p.n_trees = 20;
    Forest f = fit_forest(d, p);
    CHECK(f.predict(d) == d.labels);

    Forest again = fit_forest(d, p);
    Dataset probe = noisy_blobs(100, 3);
    probe.columns.pop_back();
    CHECK(f.predict(probe) == again.predict(probe));
    p.jobs = 4;
    CHECK(fit_forest(d, p).predict(probe) == f.predict(probe));
}

TEST_CASE("vote rules") {
    const std::string zero = "nodes 1\nL 0 1 0\ngini 0\n";
    const std::string one = "nodes 1\nL 1 0 1\ngini 0\n";
    Forest f;
    f.feature_names = {"x"};
    for (int i = 0; i < 36; ++i) f.trees.push_back(tree_from_text(zero, 1));
    std::vector<double> row{0.0};
    CHECK(f.predict(row).label == 0);
    CHECK(f.predict(row).probability == 1.0);
    for (int i = 0; i < 18; ++i) f.trees[static_cast<std::size_t>(i)] = tree_from_text(one, 1);
    CHECK(f.predict(row).label == 1);
    CHECK(f.predict(row).outlier_share == 0.5);

    Forest single;
    single.trees.push_back(tree_from_text("nodes 3\nS 0 0.5 1 2\nL 0 0.8 0.2\nL 1 0.1 0.9\ngini 0.3\n", 1));
    CHECK(single.predict(std::vector<double>{0.2}).label == 0);
    CHECK(single.predict(std::vector<double>{0.7}).label == 1);
}

TEST_CASE("one full-width tree reproduces the reference CART") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        Dataset d = noisy_blobs(120, seed);
        ForestParams p;
        p.n_trees = 1;
        p.seed = seed;
        p.tree.max_depth = 0;
        p.tree.min_leaf = static_cast<int>(1 + seed % 3);
        p.tree.mtry = 3;
        Forest f = fit_forest(d, p);

        std::mt19937_64 rng;
        auto sample = bootstrap_sample(d.rows(), seed, 0, rng);
        auto ref = ref_grow(d, sample, static_cast<std::size_t>(p.tree.min_leaf));
        Dataset probe = noisy_blobs(300, seed + 100);
        for (std::size_t r = 0; r < probe.rows(); ++r) {
            auto row = probe.row(r);
            REQUIRE(static_cast<int>(f.predict(row).label) == ref_predict(*ref, row));
        }
    }
}

TEST_CASE("tree invariants") {
    Dataset d = noisy_blobs(300, 9);
    ForestParams p;
    p.n_trees = 10;
    Forest f = fit_forest(d, p);
    for (const auto& tree : f.trees) {
        std::vector<int> split_count(d.features(), 0);
        std::vector<int> reached(tree.nodes().size(), 0);
        for (const auto& node : tree.nodes()) {
            if (node.is_leaf()) {
                CHECK(node.leaf_class == (node.probability[1] >= node.probability[0] ? 1 : 0));
            } else {
                ++split_count[static_cast<std::size_t>(node.feature)];
                ++reached[static_cast<std::size_t>(node.left)];
                ++reached[static_cast<std::size_t>(node.right)];
            }
        }
        // every non-root node has exactly one parent, so each row lands in one leaf
        for (std::size_t i = 1; i < reached.size(); ++i) CHECK(reached[i] == 1);
        for (std::size_t j = 0; j < d.features(); ++j) {
            if (split_count[j] > 0) CHECK(tree.gini_decrease()[j] > 0.0);
            else CHECK(tree.gini_decrease()[j] == 0.0);
        }
    }
}

TEST_CASE("monotone transform of a column leaves predictions unchanged") {
    Dataset d = noisy_blobs(250, 10);
    Dataset t = d;
    for (auto& v : t.columns[0]) v = std::exp(v);
    for (auto& v : t.columns[1]) v = v * v * v;
    ForestParams p;
    p.n_trees = 15;
    CHECK(fit_forest(d, p).predict(d) == fit_forest(t, p).predict(t));
}

TEST_CASE("oob error") {
    Dataset d = noisy_blobs(150, 11);
    ForestParams p;
    p.n_trees = 1;
    Forest f = fit_forest(d, p);
    std::mt19937_64 rng;
    auto sample = bootstrap_sample(d.rows(), p.seed, 0, rng);
    std::set<std::size_t> bag(sample.begin(), sample.end());
    std::size_t wrong = 0, counted = 0;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        if (bag.count(r)) continue;
        ++counted;
        wrong += f.trees[0].predict(d.row(r)) != d.labels[r];
    }
    CHECK(f.oob_rows[0].size() == counted);
    CHECK(oob_error(f, d) == static_cast<double>(wrong) / static_cast<double>(counted));

    Forest two = f;
    two.oob_rows[0].clear();
    CHECK(error_of([&] { oob_error(two, d); }) == "no_oob_rows");
}

TEST_CASE("oob error on a separable 50-row set with 100 deep trees") {
    Gen gen(12);
    std::vector<std::vector<double>> cols(2);
    std::vector<std::uint8_t> labels;
    for (int i = 0; i < 50; ++i) {
        std::uint8_t y = i % 2;
        labels.push_back(y);
        cols[0].push_back(y ? gen.real(1, 2) : gen.real(-2, -1));
        cols[1].push_back(gen.real(-1, 1));
    }
    Dataset d = make_dataset(cols, labels);
    ForestParams p;
    p.n_trees = 100;
    p.tree.max_depth = 0;
    p.tree.min_leaf = 1;
    CHECK(oob_error(fit_forest(d, p), d) <= 0.05);
}

TEST_CASE("median oob error does not rise with more trees") {
    Dataset d = noisy_blobs(400, 13);
    std::vector<double> at5, at15, at36;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ForestParams p;
        p.seed = seed;
        auto curve = oob_error_curve(fit_forest(d, p), d);
        at5.push_back(curve[4]);
        at15.push_back(curve[14]);
        at36.push_back(curve[35]);
    }
    CHECK(median(at15) <= median(at5));
    CHECK(median(at36) <= median(at15));
}

TEST_CASE("importance: constant column and duplicated feature") {
    Dataset d = noisy_blobs(600, 14);
    Dataset with_const = d;
    with_const.add_column("const", std::vector<double>(d.rows(), 4.2));
    ForestParams p;
    p.n_trees = 36;
    auto rep = importance(fit_forest(with_const, p), with_const, 7);
    REQUIRE(rep.features.size() == 4);
    CHECK(rep.features[3].feature == "const");
    CHECK(std::abs(rep.features[3].mda) < 0.01);
    CHECK(rep.features[3].mdg == 0.0);
    CHECK(rep.features[0].mda > rep.features[2].mda);

    // Two-column set: informative x0 and noise x1; then x0 duplicated.
    Dataset base = d;
    base.columns.resize(2);
    base.columns[1] = d.columns[2];
    base.feature_names.resize(2);
    Dataset dup = base;
    dup.add_column("x0_copy", base.columns[0]);
    p.tree.mtry = 1;
    auto single = importance(fit_forest(base, p), base, 7);
    auto twin = importance(fit_forest(dup, p), dup, 7);
    const double alone = single.features[0].mdg;
    const double shared = twin.features[0].mdg + twin.features[2].mdg;
    CHECK(twin.features[0].mdg < alone);
    CHECK(twin.features[2].mdg < alone);
    CHECK(std::abs(shared - alone) / alone < 0.25);
}

TEST_CASE("forest text round trip") {
    Dataset d = noisy_blobs(200, 15);
    ForestParams p;
    p.n_trees = 7;
    p.seed = 0xfeedfacecafebeefULL;
    Forest f = fit_forest(d, p);
    std::stringstream io;
    f.write(io);
    Forest back = Forest::read(io);
    std::ostringstream again;
    back.write(again);
    CHECK(again.str() == io.str());
    CHECK(back.predict(d) == f.predict(d));
    CHECK(back.params.seed == p.seed);
    CHECK(oob_error(back, d) == oob_error(f, d));

    std::istringstream wrong_version("wsnod-forest 2\n");
    CHECK(error_of([&] { Forest::read(wrong_version); }) == "invalid_argument");
    std::string text = io.str();
    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK(error_of([&] { Forest::read(truncated); }) == "invalid_argument");
}

TEST_CASE("fit errors") {
    Dataset one_class = make_dataset({{1, 2, 3}}, {0, 0, 0});
    CHECK(error_of([&] { fit_forest(one_class, {}); }) == "degenerate_labels");
    ForestParams p;
    p.tree.mtry = 5;
    Dataset d = make_dataset({{1, 2, 3}}, {0, 1, 0});
    CHECK(error_of([&] { fit_forest(d, p); }) == "invalid_argument");
}
