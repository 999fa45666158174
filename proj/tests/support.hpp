#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wsnod/error.hpp"
#include "wsnod/ingest.hpp"

namespace wsnod::test {

/// Hand-rolled generators for the property tests; every case is reproducible from its seed.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }

    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

    std::vector<double> reals(std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (auto& x : v) x = real(lo, hi);
        return v;
    }

    // Small integers, so ties and constant runs show up often.
    std::vector<double> coarse(std::size_t n, int levels) {
        std::vector<double> v(n);
        for (auto& x : v) x = integer(0, levels - 1);
        return v;
    }

    // Continuous, so ties have probability zero; checked anyway by the callers that need it.
    std::vector<double> tie_free(std::size_t n) {
        std::vector<double> v;
        while (v.size() < n) {
            double x = real(-100.0, 100.0);
            bool dup = false;
            for (double y : v) dup = dup || y == x;
            if (!dup) v.push_back(x);
        }
        return v;
    }

private:
    std::mt19937_64 rng_;
};

/// A trace with `nodes` motes on a line, `epochs` readings each, temperature = f(node, epoch).
template <typename F>
Trace line_trace(int nodes, int epochs, F&& temperature) {
    std::vector<SensorReading> readings;
    std::vector<MoteLocation> locations;
    for (int n = 1; n <= nodes; ++n) {
        locations.push_back({n, static_cast<double>(n), 0.0});
        for (int t = 0; t < epochs; ++t) {
            SensorReading r;
            r.date = {2004, 2, 28};
            r.epoch = t;
            r.mote_id = n;
            r.temperature = temperature(n, t);
            r.humidity = 40.0;
            r.light = 100.0;
            r.voltage = 2.7;
            readings.push_back(r);
        }
    }
    return assemble_trace(std::move(readings), std::move(locations));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("wsnod_" + tag + "_" + std::to_string(std::random_device{}()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Name of the error code thrown by `f`, or "none".
template <typename F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return std::string(to_string(e.code()));
    }
    return "none";
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace wsnod::test
