#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wsnod/eval.hpp"
#include "wsnod/ingest.hpp"

namespace wsnod {

/// Resolved settings for one CLI invocation.
struct RunConfig {
    std::optional<std::filesystem::path> readings;
    std::optional<std::filesystem::path> locations;
    bool synth = false;
    SynthConfig synth_config;
    LoadOptions load;
    std::optional<std::filesystem::path> table_path;

    Attribute attribute = Attribute::temperature;
    int window = kDefaultWindow;
    int neighbor_k = kDefaultNeighborCount;
    EntropyMode entropy = EntropyMode::total;
    HistoryMode history = HistoryMode::vetted;
    Pairing pairing = Pairing::neighbor;
    bool noise_all_attributes = false;

    SweepGrid grid;
    ForestParams forest;
    int knn_k = kDefaultKnnK;
    double test_fraction = kDefaultTestFraction;

    std::filesystem::path out_dir = "report";
    bool timing = false;
    int jobs = 0;

    /// Throws Error(config_error) naming the first problem found.
    void validate() const;
    PipelineConfig pipeline() const;
    std::string plan(std::string_view command) const;
};

/// Synthesizes or loads the trace named by the config.
Trace load_input(const RunConfig& config, LoadStats* stats = nullptr);

/// Full pipeline over the config's grid, report written to `out_dir`.
std::vector<std::filesystem::path> run_detect(const RunConfig& config);

}  // namespace wsnod
