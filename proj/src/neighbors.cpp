#include "wsnod/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "wsnod/error.hpp"

namespace wsnod {

std::span<const NeighborEntry> NeighborTable::of(int node_id) const {
    auto it = lists.find(node_id);
    if (it == lists.end()) return {};
    return it->second;
}

namespace {

double distance_between(const MoteLocation& a, const MoteLocation& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

std::vector<NeighborEntry> ranked_neighbors(std::span<const MoteLocation> locations, const MoteLocation& self) {
    std::vector<NeighborEntry> all;
    all.reserve(locations.size());
    for (const auto& other : locations) {
        if (other.mote_id == self.mote_id) continue;
        all.push_back({other.mote_id, distance_between(self, other)});
    }
    std::sort(all.begin(), all.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    return all;
}

}  // namespace

NeighborTable k_nearest_by_distance(std::span<const MoteLocation> locations, int k) {
    if (locations.size() < 2) fail(ErrorCode::invalid_argument, "need at least two locations");
    if (k < 1) fail(ErrorCode::invalid_argument, "k must be >= 1");
    if (static_cast<std::size_t>(k) > locations.size() - 1) {
        fail(ErrorCode::invalid_argument,
             "k=" + std::to_string(k) + " exceeds n_nodes-1=" + std::to_string(locations.size() - 1));
    }
    NeighborTable table;
    for (const auto& self : locations) {
        auto ranked = ranked_neighbors(locations, self);
        ranked.resize(static_cast<std::size_t>(k));
        table.lists[self.mote_id] = std::move(ranked);
    }
    return table;
}

void write_neighbor_table(const NeighborTable& table, std::ostream& out) {
    for (const auto& [node, list] : table.lists) {
        out << node << ':';
        for (const auto& e : list) out << ' ' << e.id;
        out << '\n';
    }
}

NeighborTable read_neighbor_table(std::istream& in, std::span<const MoteLocation> locations) {
    auto find = [&](int id) -> const MoteLocation* {
        for (const auto& l : locations) {
            if (l.mote_id == id) return &l;
        }
        return nullptr;
    };

    NeighborTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) {
            fail(ErrorCode::invalid_argument, "neighbor table line " + std::to_string(line_no) + " lacks ':'");
        }
        int node = 0;
        try {
            node = std::stoi(line.substr(0, colon));
        } catch (const std::exception&) {
            fail(ErrorCode::invalid_argument, "bad node id on neighbor table line " + std::to_string(line_no));
        }
        std::istringstream rest(line.substr(colon + 1));
        std::vector<NeighborEntry> list;
        std::string token;
        while (rest >> token) {
            int id = 0;
            try {
                id = std::stoi(token);
            } catch (const std::exception&) {
                fail(ErrorCode::invalid_argument, "bad neighbor id '" + token + "'");
            }
            if (id == node) fail(ErrorCode::invalid_argument, "node " + std::to_string(node) + " lists itself");
            double d = 0.0;
            const MoteLocation* a = find(node);
            const MoteLocation* b = find(id);
            if (a && b) d = distance_between(*a, *b);
            list.push_back({id, d});
        }
        table.lists[node] = std::move(list);
    }
    return table;
}

BinCounts deviation_bins(std::span<const double> values) {
    BinCounts counts{};
    if (values.empty()) return counts;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    const bool relative = std::abs(mean) >= 1e-9;
    for (double v : values) {
        double e = relative ? (v - mean) / mean : v - mean;
        if (e <= -0.5) {
            ++counts[0];
        } else if (e <= 0.0) {
            ++counts[1];
        } else if (e <= 0.5) {
            ++counts[2];
        } else {
            ++counts[3];
        }
    }
    return counts;
}

double entropy_weight(const BinCounts& counts, EntropyMode mode) {
    int s = 0;
    for (int a : counts) {
        if (a < 0) fail(ErrorCode::invalid_argument, "bin counts must be non-negative");
        s += a;
    }
    if (s == 0) fail(ErrorCode::invalid_argument, "bin counts sum to zero");
    double total = 0.0;
    double largest = 0.0;
    for (int a : counts) {
        if (a == 0) continue;
        double p = static_cast<double>(a) / s;
        double term = -p * std::log(p);
        total += term;
        largest = std::max(largest, term);
    }
    // -1 * ln(1) is -0.0; report +0.
    return (mode == EntropyMode::total ? total : largest) + 0.0;
}

int select_best_neighbor(std::span<const Candidate> candidates, EntropyMode mode,
                         std::vector<EntropyScore>* scores) {
    if (candidates.empty()) fail(ErrorCode::no_candidates, "no candidate neighbors");
    if (scores) scores->clear();

    const Candidate* best = nullptr;
    double best_score = -1.0;
    for (const auto& c : candidates) {
        BinCounts bins = deviation_bins(c.window);
        double h = entropy_weight(bins, mode);
        if (scores) scores->push_back({c.neighbor_id, bins, h});
        bool better = best == nullptr || h > best_score ||
                      (h == best_score && (c.distance < best->distance ||
                                           (c.distance == best->distance && c.neighbor_id < best->neighbor_id)));
        if (better) {
            best = &c;
            best_score = h;
        }
    }
    return best->neighbor_id;
}

MonteCarloResult monte_carlo_neighbor_count(const Trace& trace, const MonteCarloConfig& config) {
    if (config.trials < 1) fail(ErrorCode::invalid_argument, "trials must be >= 1");
    if (config.candidates.empty()) fail(ErrorCode::invalid_argument, "empty candidate range");
    for (int k : config.candidates) {
        if (k < 1) fail(ErrorCode::invalid_argument, "candidate neighbor counts must be >= 1");
    }
    const auto ids = trace.node_ids();
    if (ids.size() < 2) fail(ErrorCode::insufficient_data, "Monte-Carlo search needs at least two nodes");

    std::vector<MoteLocation> present;
    for (int id : ids) present.push_back(*trace.location(id));
    const int k_max = std::min<int>(*std::max_element(config.candidates.begin(), config.candidates.end()),
                                    static_cast<int>(present.size()) - 1);
    const NeighborTable table = k_nearest_by_distance(present, k_max);
    const TraceIndex index(trace);

    const std::size_t nc = config.candidates.size();
    std::vector<double> error_sum(nc, 0.0);
    std::vector<std::size_t> error_count(nc, 0);

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, trace.readings.size() - 1);
    std::vector<double> neighbor_values;
    for (int trial = 0; trial < config.trials; ++trial) {
        const SensorReading& r = trace.readings[pick(rng)];
        auto list = table.of(r.mote_id);
        // Co-observed values of the ranked neighbors, NaN where the neighbor is silent.
        neighbor_values.assign(list.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < list.size(); ++j) {
            if (auto at = index.find(list[j].id, r.epoch)) {
                neighbor_values[j] = trace.readings[*at].value(config.attribute);
            }
        }
        for (std::size_t c = 0; c < nc; ++c) {
            auto k = static_cast<std::size_t>(config.candidates[c]);
            if (k > list.size()) continue;
            double sum = 0.0;
            std::size_t seen = 0;
            for (std::size_t j = 0; j < k; ++j) {
                if (std::isnan(neighbor_values[j])) continue;
                sum += neighbor_values[j];
                ++seen;
            }
            if (seen == 0) continue;
            error_sum[c] += std::abs(r.value(config.attribute) - sum / static_cast<double>(seen));
            ++error_count[c];
        }
    }

    MonteCarloResult result;
    result.candidates = config.candidates;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < nc; ++c) {
        double mae = error_count[c] ? error_sum[c] / static_cast<double>(error_count[c])
                                    : std::numeric_limits<double>::infinity();
        double penalized = mae + config.cost_per_neighbor * config.candidates[c];
        result.mean_abs_error.push_back(mae);
        result.penalized_error.push_back(penalized);
        if (penalized < best) {
            best = penalized;
            result.best_k = config.candidates[c];
        }
    }
    if (result.best_k == 0) fail(ErrorCode::insufficient_data, "no epoch has co-observations");
    return result;
}

}  // namespace wsnod
