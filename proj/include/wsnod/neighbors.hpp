#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "wsnod/ingest.hpp"

namespace wsnod {

inline constexpr int kDefaultWindow = 10;
inline constexpr int kDefaultNeighborCount = 4;

struct NeighborEntry {
    int id = 0;
    double distance = 0.0;

    bool operator==(const NeighborEntry&) const = default;
};

/// Candidate collaborators per node, nearest first.
struct NeighborTable {
    std::map<int, std::vector<NeighborEntry>> lists;

    std::span<const NeighborEntry> of(int node_id) const;
};

NeighborTable k_nearest_by_distance(std::span<const MoteLocation> locations, int k);

/// `node_id: n1 n2 ...` per line.
void write_neighbor_table(const NeighborTable& table, std::ostream& out);

/// Reads the text form; distances are filled from `locations` when given, otherwise left 0.
NeighborTable read_neighbor_table(std::istream& in, std::span<const MoteLocation> locations = {});

/// Last W values of one attribute at one node, most recent first.
struct HistoryWindow {
    int node_id = 0;
    Attribute attribute = Attribute::temperature;
    std::vector<double> values;
    std::int64_t end_epoch = 0;
};

/// Counts a0..a3 of relative deviations from the window mean.
using BinCounts = std::array<int, 4>;

BinCounts deviation_bins(std::span<const double> values);
inline BinCounts deviation_bins(const HistoryWindow& window) { return deviation_bins(window.values); }

enum class EntropyMode {
    total,     // Shannon entropy summed over the four bins
    max_term,  // largest single -p ln p term
};

double entropy_weight(const BinCounts& counts, EntropyMode mode = EntropyMode::total);

struct Candidate {
    int neighbor_id = 0;
    double distance = 0.0;
    std::span<const double> window;
};

struct EntropyScore {
    int neighbor_id = 0;
    BinCounts bin_counts{};
    double entropy = 0.0;
};

/// Argmax of entropy weight; ties go to the nearer, then lower id, candidate.
int select_best_neighbor(std::span<const Candidate> candidates, EntropyMode mode = EntropyMode::total,
                         std::vector<EntropyScore>* scores = nullptr);

struct MonteCarloConfig {
    std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int trials = 2000;
    std::uint64_t seed = 1;
    Attribute attribute = Attribute::temperature;
    // Communication cost charged per collaborating neighbor, in attribute units.
    double cost_per_neighbor = 0.02;
};

struct MonteCarloResult {
    int best_k = 0;
    std::vector<int> candidates;
    std::vector<double> mean_abs_error;
    std::vector<double> penalized_error;
};

/// Picks the neighbor count whose neighbor-mean predicts a node's reading best, net of cost.
MonteCarloResult monte_carlo_neighbor_count(const Trace& trace, const MonteCarloConfig& config);

}  // namespace wsnod
