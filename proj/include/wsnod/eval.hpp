#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsnod/baselines.hpp"
#include "wsnod/dataset.hpp"
#include "wsnod/features.hpp"
#include "wsnod/forest.hpp"
#include "wsnod/ingest.hpp"
#include "wsnod/neighbors.hpp"

namespace wsnod {

/// Rows are the actual class, columns the predicted class.
struct ConfusionMatrix {
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tp = 0;

    static ConfusionMatrix tally(std::span<const std::uint8_t> actual, std::span<const std::uint8_t> predicted);

    std::size_t total() const { return tn + fp + fn + tp; }
    bool operator==(const ConfusionMatrix&) const = default;
};

double accuracy(const ConfusionMatrix& cm);
/// 0 when nothing was predicted (resp. present) positive.
double precision(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm);

inline constexpr double kDefaultTestFraction = 0.3;

struct RowSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified: round(test_fraction * class count) rows of each class go to test. Both lists ascending.
RowSplit split_rows(std::span<const std::uint8_t> labels, double test_fraction, std::uint64_t seed);

enum class Classifier { rf, knn, nb };

std::string_view to_string(Classifier c);
std::optional<Classifier> parse_classifier(std::string_view name);

/// Everything a sweep cell needs besides its (sigma, fraction, classifier, seed).
struct PipelineConfig {
    int neighbor_k = kDefaultNeighborCount;
    std::optional<NeighborTable> table;  // overrides the geometric k-NN table
    FeatureConfig features;
    std::vector<Attribute> noise_attributes{Attribute::temperature};
    ForestParams forest;  // seed is replaced by the cell seed
    int knn_k = kDefaultKnnK;
    double test_fraction = kDefaultTestFraction;
    bool importance = true;
    bool record_timing = false;
    int jobs = 1;
};

struct SweepGrid {
    std::vector<double> sigmas{5.0};
    std::vector<double> fractions{0.10};
    std::vector<Classifier> classifiers{Classifier::rf};
    std::vector<std::uint64_t> seeds{1};
};

struct RfDiagnostics {
    ImportanceReport importance;
    std::vector<double> oob_curve;  // OOB error after 1..n_trees trees
};

struct SweepCell {
    double sigma = 0.0;
    double fraction = 0.0;
    Classifier classifier = Classifier::rf;
    std::uint64_t seed = 0;
    ConfusionMatrix cm;
    double accuracy = 0.0;
    double seconds = 0.0;
    std::string error;  // non-empty when the cell failed
    std::optional<RfDiagnostics> rf;

    std::string id() const;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // sigma, then fraction, classifier, seed
};

/// Noise -> features -> split -> fit -> confusion matrix for every grid point. Failed cells
/// keep their error message instead of aborting the sweep.
SweepResult run_sweep(const Trace& trace, const SweepGrid& grid, const PipelineConfig& config);

/// Noise injection, neighbor table and feature extraction for one (sigma, fraction, seed).
FeatureMatrix prepare_features(const Trace& trace, double sigma, double fraction, std::uint64_t seed,
                               const PipelineConfig& config, FeatureBuildStats* stats = nullptr);

/// Train/test on an already built matrix.
SweepCell evaluate_classifier(const FeatureMatrix& matrix, Classifier classifier, std::uint64_t seed,
                              const PipelineConfig& config);

/// Writes sweep.csv, confusion_<cell>.csv, accuracy_vs_fraction_sigma<s>.svg, importance.csv,
/// oob_vs_trees.csv (and errors.csv if any cell failed). Returns the written paths.
std::vector<std::filesystem::path> emit_report(const SweepResult& result, const std::filesystem::path& out_dir);

/// Reads sweep.csv back (confusion counts, accuracy, seconds; diagnostics are not stored there).
SweepResult read_sweep_csv(const std::filesystem::path& path);

/// Line chart of mean accuracy against noise fraction, one line per classifier, for one sigma.
std::string render_accuracy_svg(const SweepResult& result, double sigma);

}  // namespace wsnod
