#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "support.hpp"
#include "wsnod/correlation.hpp"
#include "wsnod/ingest.hpp"

using namespace wsnod;
using wsnod::test::error_of;
using wsnod::test::Gen;
using wsnod::test::TempDir;

TEST_CASE("parse a trace line field by field") {
    auto r = parse_reading_line("2004-03-31 03:38:15.757551 2 1 122.153 -3.91901 11.04 2.03397");
    REQUIRE(r.has_value());
    CHECK(r->date == Date{2004, 3, 31});
    CHECK(r->time == TimeOfDay{3, 38, 15, 757551});
    CHECK(r->epoch == 2);
    CHECK(r->mote_id == 1);
    CHECK(r->temperature == 122.153);
    CHECK(r->humidity == -3.91901);
    CHECK(r->light == 11.04);
    CHECK(r->voltage == 2.03397);
}

TEST_CASE("malformed lines are rejected") {
    CHECK_FALSE(parse_reading_line("2004-03-31 03:38:15.757551 2 1 122.153 -3.91901"));
    CHECK_FALSE(parse_reading_line("2004-03-31 03:38:15.757551 2 1 122.153 -3.91901 11.04 2.03397 9"));
    CHECK_FALSE(parse_reading_line("2004-03-31 03:38:15.757551 2 1 nan -3.91901 11.04 2.03397"));
    CHECK_FALSE(parse_reading_line("2004-03-31 03:38:15.757551 2 0 1 2 3 4"));
    CHECK_FALSE(parse_reading_line("2004-13-31 03:38:15 2 1 1 2 3 4"));
    CHECK_FALSE(parse_reading_line("2004-03-31 03:38:15.1234567 2 1 1 2 3 4"));
    CHECK_FALSE(parse_reading_line(""));
    auto short_fraction = parse_reading_line("2004-03-31 03:38:15.5 2 1 1 2 3 4");
    REQUIRE(short_fraction);
    CHECK(short_fraction->time.microsecond == 500000);
}

TEST_CASE("load trace: rejects, duplicates, ordering, filters") {
    TempDir dir("ingest");
    wsnod::test::write_file(dir / "locs.txt", "1 0 0\n2 1 0\n");
    wsnod::test::write_file(dir / "data.txt",
                            "2004-02-28 00:00:31 1 2 20 40 100 2.7\n"
                            "garbage line\n"
                            "2004-02-28 00:00:00 0 2 19 40 100 2.7\n");
    auto loaded = load_trace(dir / "data.txt", dir / "locs.txt");
    CHECK(loaded.trace.readings.size() == 2);
    CHECK(loaded.stats.rejected == 1);
    CHECK(loaded.trace.readings[0].epoch == 0);

    wsnod::test::write_file(dir / "dup.txt",
                            "2004-02-28 00:00:00 0 1 19 40 100 2.7\n"
                            "2004-02-28 00:00:00 0 1 55 40 100 2.7\n"
                            "2004-02-28 00:00:00 0 9 19 40 100 2.7\n"
                            "2004-02-28 00:00:00 0 2 19 40 100 2.7\n");
    loaded = load_trace(dir / "dup.txt", dir / "locs.txt");
    CHECK(loaded.stats.duplicates == 1);
    CHECK(loaded.stats.unlocated == 1);
    CHECK(loaded.trace.readings[0].temperature == 19);

    LoadOptions only2;
    only2.nodes = {2};
    loaded = load_trace(dir / "dup.txt", dir / "locs.txt", only2);
    CHECK(loaded.trace.readings.size() == 1);
    CHECK(loaded.stats.filtered == 3);

    LoadOptions window;
    window.first_row = 1;
    window.max_rows = 1;
    loaded = load_trace(dir / "dup.txt", dir / "locs.txt", window);
    CHECK(loaded.stats.lines == 1);
    CHECK(loaded.trace.readings[0].temperature == 55);

    wsnod::test::write_file(dir / "bad.txt", "nothing\n");
    CHECK(error_of([&] { load_trace(dir / "bad.txt", dir / "locs.txt"); }) == "empty_trace");
    CHECK(error_of([&] { load_trace(dir / "missing.txt", dir / "locs.txt"); }) == "io_error");
    wsnod::test::write_file(dir / "duplocs.txt", "1 0 0\n1 2 2\n");
    CHECK(error_of([&] { load_locations(dir / "duplocs.txt"); }) == "invalid_argument");
}

TEST_CASE("synthetic trace") {
    SynthConfig c;
    c.n_nodes = 2;
    c.n_epochs = 10;
    c.seed = 7;
    std::ostringstream a, b;
    write_readings(synthesize_trace(c), a);
    write_readings(synthesize_trace(c), b);
    CHECK(a.str() == b.str());
    CHECK(synthesize_trace(c).readings.size() == 20);

    c.n_epochs = 200;
    c.jitter = 0.0;
    Trace flat = synthesize_trace(c);
    std::vector<double> s1, s2;
    for (const auto& r : flat.readings) (r.mote_id == 1 ? s1 : s2).push_back(r.temperature);
    CHECK(s1 == s2);
    CHECK(pearson(s1, s2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("default generator: adjacent nodes correlate") {
    SynthConfig c;
    Trace trace = synthesize_trace(c);
    const TraceIndex index(trace);
    const int cols = 3;
    double total = 0.0;
    int pairs = 0;
    for (int a = 1; a <= c.n_nodes; ++a) {
        for (int b : {a + 1, a + cols}) {
            if (b > c.n_nodes || (b == a + 1 && (a - 1) % cols == cols - 1)) continue;
            std::vector<double> x, y;
            for (std::int64_t t = 0; t < c.n_epochs; ++t) {
                x.push_back(trace.readings[*index.find(a, t)].temperature);
                y.push_back(trace.readings[*index.find(b, t)].temperature);
            }
            total += pearson(x, y);
            ++pairs;
        }
    }
    CHECK(pairs == 12);
    CHECK(total / pairs > 0.9);
}

TEST_CASE("trace index") {
    Trace t = wsnod::test::line_trace(2, 5, [](int n, int e) { return n * 100.0 + e; });
    t.readings.erase(t.readings.begin() + 2);  // node 1, epoch 2
    TraceIndex index(t);
    CHECK_FALSE(index.find(1, 2));
    CHECK(t.readings[*index.find_near(1, 2)].epoch == 1);
    CHECK(t.readings[*index.find(2, 4)].temperature == 204.0);
    CHECK_FALSE(index.find(3, 0));
}

TEST_CASE("property: line format round trip") {
    Gen gen(31);
    for (int c = 0; c < 3000; ++c) {
        SensorReading r;
        r.date = {gen.integer(2000, 2030), gen.integer(1, 12), gen.integer(1, 28)};
        r.time = {gen.integer(0, 23), gen.integer(0, 59), gen.integer(0, 59), gen.integer(0, 999999)};
        r.epoch = gen.integer(0, 1 << 30);
        r.mote_id = gen.integer(1, 100);
        r.temperature = gen.real(-40, 150);
        r.humidity = c % 7 == 0 ? std::ldexp(gen.real(-1, 1), gen.integer(-300, 300)) : gen.real(-5, 100);
        r.light = gen.integer(0, 2000);
        r.voltage = gen.real(0, 3);
        auto back = parse_reading_line(format_reading_line(r));
        REQUIRE(back.has_value());
        REQUIRE(*back == r);
    }
}

TEST_CASE("property: assembled traces are ordered and unique") {
    Gen gen(32);
    for (int c = 0; c < 200; ++c) {
        std::vector<SensorReading> rs;
        std::vector<MoteLocation> locs;
        for (int m = 1; m <= 5; ++m) locs.push_back({m, gen.real(0, 10), gen.real(0, 10)});
        const int n = gen.integer(0, 80);
        for (int i = 0; i < n; ++i) {
            SensorReading r;
            r.mote_id = gen.integer(1, 6);
            r.epoch = gen.integer(0, 15);
            r.temperature = i;
            rs.push_back(r);
        }
        LoadStats stats;
        Trace t = assemble_trace(rs, locs, &stats);
        for (std::size_t i = 1; i < t.readings.size(); ++i) {
            const auto& p = t.readings[i - 1];
            const auto& q = t.readings[i];
            REQUIRE((p.mote_id < q.mote_id || (p.mote_id == q.mote_id && p.epoch < q.epoch)));
        }
        REQUIRE(t.readings.size() + stats.duplicates + stats.unlocated == rs.size());
        // first occurrence wins
        for (const auto& kept : t.readings) {
            for (const auto& r : rs) {
                if (r.mote_id == kept.mote_id && r.epoch == kept.epoch) {
                    REQUIRE(r.temperature == kept.temperature);
                    break;
                }
            }
        }
    }
}
