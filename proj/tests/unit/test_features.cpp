#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "wsnod/correlation.hpp"
#include "wsnod/features.hpp"

using namespace wsnod;
using wsnod::test::error_of;

namespace {

LabeledTrace clean(const Trace& t) {
    NoiseSpec spec;
    spec.fraction = 0.0;
    return inject_noise(t, spec);
}

LabeledTrace noisy(const Trace& t, double fraction, std::uint64_t seed) {
    NoiseSpec spec;
    spec.fraction = fraction;
    spec.seed = seed;
    return inject_noise(t, spec);
}

double entropy_oracle(const std::vector<double>& w) {
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    int counts[4] = {0, 0, 0, 0};
    for (double v : w) {
        double e = std::abs(mean) < 1e-9 ? v - mean : (v - mean) / mean;
        counts[e <= -0.5 ? 0 : e <= 0.0 ? 1 : e <= 0.5 ? 2 : 3]++;
    }
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(w.size());
        h -= p * std::log(p);
    }
    return h;
}

// Recomputes every row from the definitions: live reading at t, stored history, shared neighbor series.
std::vector<FeatureRow> oracle_rows(const LabeledTrace& l, const NeighborTable& table, int w, int nodes, int epochs) {
    auto at = [&](const std::vector<SensorReading>& rs, int node, int epoch) {
        return rs[static_cast<std::size_t>((node - 1) * epochs + epoch)].temperature;
    };
    std::vector<FeatureRow> rows;
    for (int node = 1; node <= nodes; ++node) {
        for (int t = w - 1; t < epochs; ++t) {
            std::vector<double> x{at(l.trace.readings, node, t)};
            for (int k = 1; k < w; ++k) x.push_back(at(l.original, node, t - k));
            int best = -1;
            double best_h = -1.0, best_d = 0.0;
            std::vector<double> y;
            for (const auto& nb : table.of(node)) {
                std::vector<double> cand;
                for (int k = 0; k < w; ++k) cand.push_back(at(l.original, nb.id, t - k));
                double h = entropy_oracle(cand);
                if (h > best_h || (h == best_h && (nb.distance < best_d || (nb.distance == best_d && nb.id < best)))) {
                    best = nb.id;
                    best_h = h;
                    best_d = nb.distance;
                    y = cand;
                }
            }
            FeatureRow r;
            r.node_id = node;
            r.end_epoch = t;
            r.f1 = pearson(x, y);
            r.f2 = spearman(x, y);
            r.f3 = distance_correlation(x, y);
            r.f4 = zscore_correlation(x, y);
            r.fn = y[0];
            r.label = l.labels[static_cast<std::size_t>((node - 1) * epochs + t)];
            rows.push_back(r);
        }
    }
    return rows;
}

}  // namespace

TEST_CASE("identical windows give unit correlations and fn = neighbor value") {
    Trace t = wsnod::test::line_trace(2, 12, [](int n, int e) { return 10.0 + e * e + 0.0 * n; });
    auto l = clean(t);
    auto table = k_nearest_by_distance(t.locations, 1);
    auto m = build_feature_matrix(l, table);
    REQUIRE(m.rows.size() == 6);
    for (const auto& r : m.rows) {
        CHECK(r.f1 == doctest::Approx(1.0));
        CHECK(r.f2 == doctest::Approx(1.0));
        CHECK(r.f3 == doctest::Approx(1.0));
        CHECK(r.f4 == doctest::Approx(1.0));
        CHECK(r.fn == 10.0 + r.end_epoch * r.end_epoch);
    }
}

TEST_CASE("constant windows hit the guards but still emit rows") {
    Trace t = wsnod::test::line_trace(2, 10, [](int n, int) { return 20.0 + n; });
    auto m = build_feature_matrix(clean(t), k_nearest_by_distance(t.locations, 1));
    REQUIRE(m.rows.size() == 2);
    for (const auto& r : m.rows) {
        CHECK(r.f1 == 0.0);
        CHECK(r.f2 == 0.0);
        CHECK(r.f3 == 0.0);
        CHECK(r.f4 == 0.0);
    }
}

TEST_CASE("single node has no neighbor") {
    Trace t = wsnod::test::line_trace(1, 30, [](int, int e) { return e; });
    CHECK(error_of([&] { build_feature_matrix(clean(t), NeighborTable{}); }) == "insufficient_history");
    FeatureConfig c;
    c.window = 1;
    Trace two = wsnod::test::line_trace(2, 30, [](int, int e) { return e; });
    CHECK(error_of([&] { build_feature_matrix(clean(two), k_nearest_by_distance(two.locations, 1), c); }) ==
          "invalid_argument");
}

TEST_CASE("rows match a from-definition rebuild") {
    const int nodes = 5, epochs = 60, w = 10;
    test::Gen gen(41);
    std::vector<double> field;
    for (int i = 0; i < nodes * epochs; ++i) field.push_back(gen.real(15, 25));
    Trace t = wsnod::test::line_trace(nodes, epochs, [&](int n, int e) { return field[(n - 1) * epochs + e]; });
    auto l = noisy(t, 0.2, 3);
    auto table = k_nearest_by_distance(t.locations, 3);
    FeatureBuildStats stats;
    auto m = build_feature_matrix(l, table, {}, &stats, 3);
    auto expect = oracle_rows(l, table, w, nodes, epochs);
    REQUIRE(m.rows.size() == expect.size());
    CHECK(stats.emitted == static_cast<std::size_t>(nodes * (epochs - w + 1)));
    CHECK(stats.short_history == static_cast<std::size_t>(nodes * (w - 1)));
    for (std::size_t i = 0; i < expect.size(); ++i) REQUIRE(m.rows[i] == expect[i]);
}

TEST_CASE("observed history and lagged pairing use the corrupted and own series") {
    const int epochs = 40;
    test::Gen gen(42);
    Trace t = wsnod::test::line_trace(2, epochs, [&](int, int) { return gen.real(0, 10); });
    auto l = noisy(t, 0.3, 5);
    auto table = k_nearest_by_distance(t.locations, 1);

    FeatureConfig obs;
    obs.history = HistoryMode::observed;
    auto m = build_feature_matrix(l, table, obs);
    const auto& row = m.rows[5];  // node 1, epoch 14
    std::vector<double> x, y;
    for (int k = 0; k < 10; ++k) {
        x.push_back(l.trace.readings[static_cast<std::size_t>(14 - k)].temperature);
        y.push_back(l.trace.readings[static_cast<std::size_t>(epochs + 14 - k)].temperature);
    }
    CHECK(row.end_epoch == 14);
    CHECK(row.f1 == pearson(x, y));
    CHECK(row.fn == y[0]);

    FeatureConfig lag;
    lag.pairing = Pairing::lagged;
    auto ml = build_feature_matrix(l, table, lag);
    CHECK(ml.rows.front().end_epoch == 10);
    std::vector<double> lx{l.trace.readings[10].temperature}, ly;
    for (int k = 1; k < 10; ++k) lx.push_back(l.original[static_cast<std::size_t>(10 - k)].temperature);
    for (int k = 0; k < 10; ++k) ly.push_back(l.original[static_cast<std::size_t>(9 - k)].temperature);
    CHECK(ml.rows.front().f2 == spearman(lx, ly));
}

TEST_CASE("feature csv round trip") {
    SynthConfig sc;
    sc.n_nodes = 4;
    sc.n_epochs = 80;
    Trace t = synthesize_trace(sc);
    auto m = build_feature_matrix(noisy(t, 0.1, 1), k_nearest_by_distance(t.locations, 3));
    std::stringstream io;
    write_feature_csv(m, io);
    auto back = read_feature_csv(io);
    CHECK(back.rows == m.rows);

    std::istringstream bad("node,epoch,f1,f2,f3,f4,fn,label\n1,2,3\n");
    CHECK(error_of([&] { read_feature_csv(bad); }) == "invalid_argument");
    std::istringstream no_header("1,2\n");
    CHECK(error_of([&] { read_feature_csv(no_header); }) == "invalid_argument");
}

TEST_CASE("property: feature ranges, f1 = f4, job count does not matter") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        SynthConfig sc;
        sc.n_nodes = 6;
        sc.n_epochs = 150;
        sc.seed = seed;
        sc.jitter = 0.1 * static_cast<double>(seed);
        Trace t = synthesize_trace(sc);
        auto l = noisy(t, 0.05 * static_cast<double>(seed), seed);
        auto table = k_nearest_by_distance(t.locations, 4);
        FeatureConfig c;
        c.history = seed % 2 ? HistoryMode::vetted : HistoryMode::observed;
        auto a = build_feature_matrix(l, table, c, nullptr, 1);
        auto b = build_feature_matrix(l, table, c, nullptr, 4);
        REQUIRE(a.rows == b.rows);
        for (const auto& r : a.rows) {
            REQUIRE(std::abs(r.f1) <= 1.0);
            REQUIRE(std::abs(r.f2) <= 1.0);
            REQUIRE(std::abs(r.f4) <= 1.0);
            REQUIRE(r.f3 >= 0.0);
            REQUIRE(r.f3 <= 1.0);
            REQUIRE(std::abs(r.f1 - r.f4) < 1e-9);
        }
    }
}
