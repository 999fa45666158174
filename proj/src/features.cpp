#include "wsnod/features.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "wsnod/correlation.hpp"
#include "wsnod/error.hpp"
#include "wsnod/numfmt.hpp"
#include "wsnod/parallel.hpp"

namespace wsnod {

namespace {

struct WindowSource {
    const LabeledTrace& labeled;
    Attribute attribute;
    HistoryMode history;
    std::size_t width;

    const std::vector<SensorReading>& stored() const {
        return history == HistoryMode::vetted ? labeled.original : labeled.trace.readings;
    }

    // Window ending at reading `end`, most recent first. Caller guarantees end-begin >= width-1.
    void fill(std::size_t end, std::vector<double>& out) const {
        out.resize(width);
        out[0] = labeled.trace.readings[end].value(attribute);
        const auto& past = stored();
        for (std::size_t k = 1; k < width; ++k) out[k] = past[end - k].value(attribute);
    }

    // What a neighbor shares: its stored series, current slot included.
    void fill_shared(std::size_t end, std::vector<double>& out) const {
        out.resize(width);
        const auto& past = stored();
        for (std::size_t k = 0; k < width; ++k) out[k] = past[end - k].value(attribute);
    }
};

struct NodeRows {
    std::vector<FeatureRow> rows;
    FeatureBuildStats stats;
};

NodeRows rows_for_node(const TraceIndex::Range& range, const TraceIndex& index, const NeighborTable& table,
                       const WindowSource& source, const FeatureConfig& config) {
    NodeRows out;
    const auto& readings = source.labeled.trace.readings;
    const std::size_t w = source.width;
    const auto neighbors = table.of(range.mote_id);

    std::vector<double> x, lagged;
    std::vector<std::vector<double>> windows(neighbors.size());
    std::vector<Candidate> candidates;

    for (std::size_t i = range.begin; i < range.end; ++i) {
        if (i - range.begin + 1 < w) {
            ++out.stats.short_history;
            continue;
        }
        const std::int64_t t = readings[i].epoch;

        candidates.clear();
        for (std::size_t c = 0; c < neighbors.size(); ++c) {
            auto at = index.find_near(neighbors[c].id, t);
            if (!at) continue;
            const auto* nr = index.range(neighbors[c].id);
            if (*at - nr->begin + 1 < w) continue;
            source.fill_shared(*at, windows[c]);
            candidates.push_back({neighbors[c].id, neighbors[c].distance, windows[c]});
        }
        if (candidates.empty()) {
            ++out.stats.unaligned;
            continue;
        }

        int best = select_best_neighbor(candidates, config.entropy);
        std::size_t pick = 0;
        while (candidates[pick].neighbor_id != best) ++pick;

        source.fill(i, x);
        std::span<const double> y = candidates[pick].window;
        if (config.pairing == Pairing::lagged) {
            if (i - range.begin < w) {
                ++out.stats.short_history;
                continue;
            }
            source.fill_shared(i - 1, lagged);
            y = lagged;
        }

        FeatureRow row;
        row.node_id = range.mote_id;
        row.end_epoch = t;
        row.f1 = pearson(x, y);
        row.f2 = spearman(x, y);
        row.f3 = distance_correlation(x, y);
        row.f4 = zscore_correlation(x, y);
        row.fn = candidates[pick].window[0];
        row.label = source.labeled.labels[i];
        out.rows.push_back(row);
        ++out.stats.emitted;
    }
    return out;
}

}  // namespace

FeatureMatrix build_feature_matrix(const LabeledTrace& labeled, const NeighborTable& table,
                                   const FeatureConfig& config, FeatureBuildStats* stats, int jobs) {
    if (config.window < 2) fail(ErrorCode::invalid_argument, "window must be >= 2");
    if (labeled.labels.size() != labeled.trace.readings.size() ||
        labeled.original.size() != labeled.trace.readings.size()) {
        fail(ErrorCode::invalid_argument, "labels/original do not align with readings");
    }

    const TraceIndex index(labeled.trace);
    const WindowSource source{labeled, config.attribute, config.history, static_cast<std::size_t>(config.window)};
    const auto ranges = index.ranges();

    std::vector<NodeRows> per_node(ranges.size());
    parallel_for(ranges.size(), jobs, [&](std::size_t n) {
        per_node[n] = rows_for_node(ranges[n], index, table, source, config);
    });

    FeatureMatrix matrix;
    matrix.attribute = config.attribute;
    FeatureBuildStats total;
    for (auto& node : per_node) {
        matrix.rows.insert(matrix.rows.end(), node.rows.begin(), node.rows.end());
        total.emitted += node.stats.emitted;
        total.short_history += node.stats.short_history;
        total.unaligned += node.stats.unaligned;
    }
    if (stats) *stats = total;
    if (matrix.rows.empty()) {
        fail(ErrorCode::insufficient_history, "no feature row could be emitted (missing neighbors or short history)");
    }
    return matrix;
}

void write_feature_csv(const FeatureMatrix& matrix, std::ostream& out) {
    out << "node,epoch,f1,f2,f3,f4,fn,label\n";
    for (const auto& r : matrix.rows) {
        out << r.node_id << ',' << r.end_epoch << ',' << format_real(r.f1) << ',' << format_real(r.f2) << ','
            << format_real(r.f3) << ',' << format_real(r.f4) << ',' << format_real(r.fn) << ','
            << static_cast<int>(r.label) << '\n';
    }
}

FeatureMatrix read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("node,epoch,f1,f2,f3,f4,fn,label", 0) != 0) {
        fail(ErrorCode::invalid_argument, "feature CSV lacks the expected header");
    }
    FeatureMatrix matrix;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line, ',');
        auto bad = [&] { fail(ErrorCode::invalid_argument, "malformed feature CSV line " + std::to_string(line_no)); };
        if (cells.size() != 8) bad();
        FeatureRow r;
        auto node = parse_double(cells[0]);
        auto epoch = parse_double(cells[1]);
        auto label = parse_double(cells[7]);
        if (!node || !epoch || !label || (*label != 0.0 && *label != 1.0)) bad();
        r.node_id = static_cast<int>(*node);
        r.end_epoch = static_cast<std::int64_t>(*epoch);
        r.label = static_cast<std::uint8_t>(*label);
        double* slots[] = {&r.f1, &r.f2, &r.f3, &r.f4, &r.fn};
        for (std::size_t k = 0; k < 5; ++k) {
            auto v = parse_double(cells[2 + k]);
            if (!v) bad();
            *slots[k] = *v;
        }
        matrix.rows.push_back(r);
    }
    return matrix;
}

}  // namespace wsnod
