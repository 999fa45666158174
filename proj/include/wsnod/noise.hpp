#pragma once

#include <cstdint>
#include <vector>

#include "wsnod/ingest.hpp"

namespace wsnod {

struct NoiseSpec {
    double sigma = 5.0;
    double fraction = 0.10;
    std::vector<Attribute> attributes{Attribute::temperature};
    std::uint64_t seed = 1;

    void validate() const;
};

/// A trace with injected outliers. `labels[i]` is 1 iff readings[i] was corrupted;
/// `original` keeps the uncorrupted readings aligned one-to-one.
struct LabeledTrace {
    Trace trace;
    std::vector<SensorReading> original;
    std::vector<std::uint8_t> labels;
};

/// Adds N(0, sigma^2) to exactly round(fraction * N) readings chosen by a seeded shuffle.
LabeledTrace inject_noise(const Trace& trace, const NoiseSpec& spec);

}  // namespace wsnod
