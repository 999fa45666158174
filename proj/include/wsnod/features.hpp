#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wsnod/ingest.hpp"
#include "wsnod/neighbors.hpp"
#include "wsnod/noise.hpp"

namespace wsnod {

inline constexpr std::size_t kFeatureCount = 5;

/// f1 Pearson, f2 Spearman, f3 distance correlation, f4 z-score correlation,
/// fn the best neighbor's current reading.
struct FeatureRow {
    int node_id = 0;
    std::int64_t end_epoch = 0;
    double f1 = 0.0;
    double f2 = 0.0;
    double f3 = 0.0;
    double f4 = 0.0;
    double fn = 0.0;
    std::uint8_t label = 0;

    std::array<double, kFeatureCount> features() const { return {f1, f2, f3, f4, fn}; }

    bool operator==(const FeatureRow&) const = default;
};

struct FeatureMatrix {
    std::vector<FeatureRow> rows;
    std::vector<std::string> feature_names{"f1", "f2", "f3", "f4", "fn"};
    Attribute attribute = Attribute::temperature;
};

/// What the windows hold. Under `vetted` the node's own current reading is the only live value:
/// its history and everything received from neighbors are values as stored before corruption.
enum class HistoryMode {
    vetted,
    observed,  // the corrupted trace throughout
};

/// Which series the correlation features relate.
enum class Pairing {
    neighbor,  // node window vs best-neighbor window
    lagged,    // node window vs the node's own window one reading earlier
};

struct FeatureConfig {
    Attribute attribute = Attribute::temperature;
    int window = kDefaultWindow;
    EntropyMode entropy = EntropyMode::total;
    HistoryMode history = HistoryMode::vetted;
    Pairing pairing = Pairing::neighbor;
};

struct FeatureBuildStats {
    std::size_t emitted = 0;
    std::size_t short_history = 0;  // epochs before the node's first full window
    std::size_t unaligned = 0;      // no candidate neighbor had a full window near the epoch
};

/// One row per (node, epoch) with a full window, in node-then-epoch order.
FeatureMatrix build_feature_matrix(const LabeledTrace& labeled, const NeighborTable& table,
                                   const FeatureConfig& config = {}, FeatureBuildStats* stats = nullptr,
                                   int jobs = 1);

/// Header `node,epoch,f1,f2,f3,f4,fn,label`.
void write_feature_csv(const FeatureMatrix& matrix, std::ostream& out);
FeatureMatrix read_feature_csv(std::istream& in);

}  // namespace wsnod
