#include "wsnod/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "wsnod/error.hpp"
#include "wsnod/numfmt.hpp"

namespace wsnod {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) fail(ErrorCode::config_error, message);
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& values, Fmt&& fmt) {
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) out += ',';
        out += fmt(v);
    }
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (synth) {
        require(synth_config.n_nodes >= 2, "--nodes must be >= 2");
        require(synth_config.n_epochs >= window, "--epochs must cover at least one window");
        require(synth_config.grid_spacing > 0.0, "--spacing must be > 0");
        require(synth_config.jitter >= 0.0, "--jitter must be >= 0");
    } else {
        require(readings.has_value() && locations.has_value(),
                "either --synth or both --readings and --locations are required");
        require(std::filesystem::is_regular_file(*readings), "readings file not found: " + readings->string());
        require(std::filesystem::is_regular_file(*locations), "locations file not found: " + locations->string());
    }
    if (table_path) {
        require(std::filesystem::is_regular_file(*table_path), "neighbor table not found: " + table_path->string());
    }
    require(window >= 2, "--window must be >= 2");
    require(neighbor_k >= 1 && neighbor_k <= 10, "--k must lie in 1..10");
    require(!grid.sigmas.empty() && !grid.fractions.empty() && !grid.classifiers.empty() && !grid.seeds.empty(),
            "sweep grid axes must be non-empty");
    for (double s : grid.sigmas) require(s >= 0.0, "sigma must be >= 0");
    for (double f : grid.fractions) require(f >= 0.0 && f <= 1.0, "noise fraction must lie in [0, 1]");
    require(forest.n_trees >= 1, "--trees must be >= 1");
    require(forest.tree.min_leaf >= 1, "--min-leaf must be >= 1");
    require(forest.tree.mtry <= static_cast<int>(kFeatureCount), "--mtry exceeds the feature count");
    require(knn_k >= 1 && knn_k % 2 == 1, "--knn-k must be odd");
    require(test_fraction > 0.0 && test_fraction < 1.0, "--test-fraction must lie in (0, 1)");
}

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p;
    p.neighbor_k = neighbor_k;
    if (table_path) {
        std::ifstream in(*table_path);
        if (!in) fail(ErrorCode::io_error, "cannot read " + table_path->string());
        p.table = read_neighbor_table(in);
    }
    p.features.attribute = attribute;
    p.features.window = window;
    p.features.entropy = entropy;
    p.features.history = history;
    p.features.pairing = pairing;
    p.noise_attributes = noise_all_attributes ? std::vector<Attribute>(kAllAttributes.begin(), kAllAttributes.end())
                                              : std::vector<Attribute>{attribute};
    p.forest = forest;
    p.knn_k = knn_k;
    p.test_fraction = test_fraction;
    p.record_timing = timing;
    p.jobs = jobs;
    return p;
}

std::string RunConfig::plan(std::string_view command) const {
    std::ostringstream out;
    out << "command: " << command << '\n';
    if (synth) {
        out << "input: synthetic nodes=" << synth_config.n_nodes << " epochs=" << synth_config.n_epochs
            << " spacing=" << format_real(synth_config.grid_spacing) << " jitter=" << format_real(synth_config.jitter)
            << " seed=" << synth_config.seed << '\n';
    } else {
        out << "input: readings=" << (readings ? readings->string() : "-")
            << " locations=" << (locations ? locations->string() : "-") << '\n';
    }
    out << "steps: ingest -> noise -> neighbors -> features -> classify -> eval\n";
    out << "attribute: " << to_string(attribute) << " window=" << window << " k=" << neighbor_k
        << " entropy=" << (entropy == EntropyMode::total ? "total" : "max-term")
        << " history=" << (history == HistoryMode::vetted ? "vetted" : "observed") << '\n';
    out << "sigmas: " << join(grid.sigmas, format_real) << '\n';
    out << "fractions: " << join(grid.fractions, format_real) << '\n';
    out << "classifiers: " << join(grid.classifiers, [](Classifier c) { return std::string(to_string(c)); }) << '\n';
    out << "seeds: " << join(grid.seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n';
    out << "forest: trees=" << forest.n_trees << " max_depth=" << forest.tree.max_depth
        << " min_leaf=" << forest.tree.min_leaf << " mtry=" << forest.tree.mtry << '\n';
    out << "split: test_fraction=" << format_real(test_fraction) << '\n';
    out << "output: " << out_dir.string() << '\n';
    return out.str();
}

Trace load_input(const RunConfig& config, LoadStats* stats) {
    if (config.synth) return synthesize_trace(config.synth_config);
    auto loaded = load_trace(*config.readings, *config.locations, config.load);
    if (stats) *stats = loaded.stats;
    return std::move(loaded.trace);
}

std::vector<std::filesystem::path> run_detect(const RunConfig& config) {
    config.validate();
    const Trace trace = load_input(config);
    const SweepResult result = run_sweep(trace, config.grid, config.pipeline());
    return emit_report(result, config.out_dir);
}

}  // namespace wsnod
