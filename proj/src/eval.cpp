#include "wsnod/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "wsnod/error.hpp"
#include "wsnod/noise.hpp"
#include "wsnod/numfmt.hpp"
#include "wsnod/parallel.hpp"

namespace wsnod {

ConfusionMatrix ConfusionMatrix::tally(std::span<const std::uint8_t> actual, std::span<const std::uint8_t> predicted) {
    if (actual.size() != predicted.size()) fail(ErrorCode::invalid_argument, "label/prediction length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i]) {
            (predicted[i] ? cm.tp : cm.fn) += 1;
        } else {
            (predicted[i] ? cm.fp : cm.tn) += 1;
        }
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) fail(ErrorCode::invalid_argument, "accuracy of an empty confusion matrix");
    return static_cast<double>(cm.tn + cm.tp) / static_cast<double>(cm.total());
}

double precision(const ConfusionMatrix& cm) {
    const auto predicted = cm.tp + cm.fp;
    return predicted ? static_cast<double>(cm.tp) / static_cast<double>(predicted) : 0.0;
}

double recall(const ConfusionMatrix& cm) {
    const auto present = cm.tp + cm.fn;
    return present ? static_cast<double>(cm.tp) / static_cast<double>(present) : 0.0;
}

RowSplit split_rows(std::span<const std::uint8_t> labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        fail(ErrorCode::invalid_argument, "test fraction must lie in [0, 1]");
    }
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] ? 1 : 0].push_back(i);
    if (by_class[0].empty() || by_class[1].empty()) {
        fail(ErrorCode::degenerate_labels, "stratified split needs both classes");
    }
    std::mt19937_64 rng(seed);
    RowSplit out;
    for (auto& rows : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
        out.test.insert(out.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::string_view to_string(Classifier c) {
    switch (c) {
        case Classifier::rf: return "rf";
        case Classifier::knn: return "knn";
        case Classifier::nb: return "nb";
    }
    return "unknown";
}

std::optional<Classifier> parse_classifier(std::string_view name) {
    for (Classifier c : {Classifier::rf, Classifier::knn, Classifier::nb}) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

std::string SweepCell::id() const {
    return "s" + format_real(sigma) + "_f" + format_real(fraction) + "_" + std::string(to_string(classifier)) + "_seed" +
           std::to_string(seed);
}

FeatureMatrix prepare_features(const Trace& trace, double sigma, double fraction, std::uint64_t seed,
                               const PipelineConfig& config, FeatureBuildStats* stats) {
    NoiseSpec spec{sigma, fraction, config.noise_attributes, seed};
    LabeledTrace labeled = inject_noise(trace, spec);
    NeighborTable table = config.table ? *config.table : k_nearest_by_distance(trace.locations, config.neighbor_k);
    return build_feature_matrix(labeled, table, config.features, stats, config.jobs);
}

SweepCell evaluate_classifier(const FeatureMatrix& matrix, Classifier classifier, std::uint64_t seed,
                              const PipelineConfig& config) {
    const Dataset data = Dataset::from(matrix);
    const RowSplit parts = split_rows(data.labels, config.test_fraction, seed);
    if (parts.test.empty()) fail(ErrorCode::invalid_argument, "test split is empty");
    const Dataset train = data.subset(parts.train);
    const Dataset test = data.subset(parts.test);

    SweepCell cell;
    cell.classifier = classifier;
    cell.seed = seed;
    std::vector<std::uint8_t> predicted;
    switch (classifier) {
        case Classifier::rf: {
            ForestParams params = config.forest;
            params.seed = seed;
            params.jobs = config.jobs;
            Forest forest = fit_forest(train, params);
            predicted = forest.predict(test);
            if (config.importance) {
                cell.rf = RfDiagnostics{importance(forest, train, seed), oob_error_curve(forest, train)};
            }
            break;
        }
        case Classifier::knn: predicted = knn_fit_predict(train, test, config.knn_k); break;
        case Classifier::nb: predicted = nb_fit_predict(train, test); break;
    }
    cell.cm = ConfusionMatrix::tally(test.labels, predicted);
    cell.accuracy = accuracy(cell.cm);
    return cell;
}

SweepResult run_sweep(const Trace& trace, const SweepGrid& grid, const PipelineConfig& config) {
    if (grid.sigmas.empty() || grid.fractions.empty() || grid.classifiers.empty() || grid.seeds.empty()) {
        fail(ErrorCode::invalid_argument, "sweep grid has an empty axis");
    }
    using Clock = std::chrono::steady_clock;

    struct Group {
        double sigma;
        double fraction;
        std::uint64_t seed;
        std::vector<SweepCell> cells;  // one per classifier, grid order
    };
    std::vector<Group> groups;
    for (double s : grid.sigmas) {
        for (double f : grid.fractions) {
            for (std::uint64_t seed : grid.seeds) groups.push_back({s, f, seed, {}});
        }
    }

    const int outer_jobs = resolve_jobs(config.jobs);
    PipelineConfig inner = config;
    inner.jobs = groups.size() >= static_cast<std::size_t>(outer_jobs) ? 1 : outer_jobs;

    parallel_for(groups.size(), outer_jobs, [&](std::size_t g) {
        Group& group = groups[g];
        auto make_failed = [&](Classifier c, const std::string& message) {
            SweepCell cell;
            cell.classifier = c;
            cell.error = message;
            return cell;
        };
        auto start = Clock::now();
        std::optional<FeatureMatrix> matrix;
        std::string feature_error;
        try {
            matrix = prepare_features(trace, group.sigma, group.fraction, group.seed, inner);
        } catch (const std::exception& e) {
            feature_error = e.what();
        }
        const double feature_seconds = std::chrono::duration<double>(Clock::now() - start).count();

        for (Classifier c : grid.classifiers) {
            SweepCell cell;
            if (!matrix) {
                cell = make_failed(c, feature_error);
            } else {
                auto t0 = Clock::now();
                try {
                    cell = evaluate_classifier(*matrix, c, group.seed, inner);
                    cell.seconds = feature_seconds + std::chrono::duration<double>(Clock::now() - t0).count();
                } catch (const std::exception& e) {
                    cell = make_failed(c, e.what());
                }
            }
            cell.sigma = group.sigma;
            cell.fraction = group.fraction;
            cell.seed = group.seed;
            if (!config.record_timing) cell.seconds = 0.0;
            group.cells.push_back(std::move(cell));
        }
    });

    // Reassemble in grid order: sigma, fraction, classifier, seed.
    SweepResult result;
    const std::size_t n_seeds = grid.seeds.size();
    for (std::size_t si = 0; si < grid.sigmas.size(); ++si) {
        for (std::size_t fi = 0; fi < grid.fractions.size(); ++fi) {
            for (std::size_t ci = 0; ci < grid.classifiers.size(); ++ci) {
                for (std::size_t ki = 0; ki < n_seeds; ++ki) {
                    const std::size_t g = (si * grid.fractions.size() + fi) * n_seeds + ki;
                    result.cells.push_back(groups[g].cells[ci]);
                }
            }
        }
    }
    return result;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::filesystem::path>& written) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
    written.push_back(path);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string render_accuracy_svg(const SweepResult& result, double sigma) {
    std::map<Classifier, std::map<double, std::pair<double, int>>> series;
    for (const auto& cell : result.cells) {
        if (cell.sigma != sigma || !cell.error.empty()) continue;
        auto& slot = series[cell.classifier][cell.fraction];
        slot.first += cell.accuracy;
        slot.second += 1;
    }

    double x_lo = 1.0, x_hi = 0.0, y_lo = 1.0;
    for (const auto& [c, points] : series) {
        for (const auto& [f, acc] : points) {
            x_lo = std::min(x_lo, f);
            x_hi = std::max(x_hi, f);
            y_lo = std::min(y_lo, acc.first / acc.second);
        }
    }
    if (series.empty()) {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if (x_hi <= x_lo) {
        x_lo -= 0.05;
        x_hi += 0.05;
    }
    y_lo = std::max(0.0, std::floor((y_lo - 0.02) * 50.0) / 50.0);
    const double y_hi = 1.0;

    constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 130, kTop = 40, kBottom = 50;
    auto px = [&](double f) { return kLeft + (f - x_lo) / (x_hi - x_lo) * (kW - kLeft - kRight); };
    auto py = [&](double a) { return kTop + (y_hi - a) / (y_hi - y_lo) * (kH - kTop - kBottom); };

    static constexpr const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">Accuracy vs noise fraction, sigma = "
        << format_real(sigma) << "</text>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\""
        << kH - kBottom << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double a = y_lo + (y_hi - y_lo) * i / 4.0;
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(py(a) + 4, 1) << "\" text-anchor=\"end\">"
            << fixed(a, 3) << "</text>\n";
        double f = x_lo + (x_hi - x_lo) * i / 4.0;
        svg << "<text x=\"" << fixed(px(f), 1) << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"middle\">"
            << fixed(f, 3) << "</text>\n";
    }
    svg << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 10
        << "\" text-anchor=\"middle\">noise fraction</text>\n";

    int line = 0;
    for (const auto& [c, points] : series) {
        const char* color = kColors[static_cast<int>(c) % 3];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        bool first = true;
        for (const auto& [f, acc] : points) {
            svg << (first ? "" : " ") << fixed(px(f), 1) << ',' << fixed(py(acc.first / acc.second), 1);
            first = false;
        }
        svg << "\"/>\n";
        for (const auto& [f, acc] : points) {
            svg << "<circle cx=\"" << fixed(px(f), 1) << "\" cy=\"" << fixed(py(acc.first / acc.second), 1)
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        double ly = kTop + 20.0 * line++;
        svg << "<line x1=\"" << kW - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 35 << "\" y2=\""
            << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kW - kRight + 40 << "\" y=\"" << ly + 4 << "\">" << to_string(c) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::filesystem::path> emit_report(const SweepResult& result, const std::filesystem::path& out_dir) {
    if (result.cells.empty()) fail(ErrorCode::invalid_argument, "cannot report an empty sweep");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::io_error, "cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;

    std::ostringstream sweep;
    sweep << "sigma,fraction,classifier,seed,tn,fp,fn,tp,accuracy,seconds\n";
    for (const auto& c : result.cells) {
        sweep << format_real(c.sigma) << ',' << format_real(c.fraction) << ',' << to_string(c.classifier) << ','
              << c.seed << ',' << c.cm.tn << ',' << c.cm.fp << ',' << c.cm.fn << ',' << c.cm.tp << ','
              << (c.error.empty() ? format_real(c.accuracy) : "nan") << ',' << format_real(c.seconds) << '\n';
    }
    write_file(out_dir / "sweep.csv", sweep.str(), written);

    for (const auto& c : result.cells) {
        if (!c.error.empty()) continue;
        std::ostringstream cm;
        cm << "metric,value\n"
           << "tn," << c.cm.tn << "\nfp," << c.cm.fp << "\nfn," << c.cm.fn << "\ntp," << c.cm.tp << '\n'
           << "accuracy," << format_real(accuracy(c.cm)) << '\n'
           << "precision," << format_real(precision(c.cm)) << '\n'
           << "recall," << format_real(recall(c.cm)) << '\n';
        write_file(out_dir / ("confusion_" + c.id() + ".csv"), cm.str(), written);
    }

    std::set<double> sigmas;
    for (const auto& c : result.cells) sigmas.insert(c.sigma);
    for (double s : sigmas) {
        write_file(out_dir / ("accuracy_vs_fraction_sigma" + format_real(s) + ".svg"), render_accuracy_svg(result, s),
                   written);
    }

    std::ostringstream imp, oob;
    imp << "sigma,fraction,seed,feature,mda,mdg\n";
    oob << "sigma,fraction,seed,n_trees,oob_error\n";
    for (const auto& c : result.cells) {
        if (!c.rf) continue;
        for (const auto& f : c.rf->importance.features) {
            imp << format_real(c.sigma) << ',' << format_real(c.fraction) << ',' << c.seed << ',' << f.feature << ','
                << format_real(f.mda) << ',' << format_real(f.mdg) << '\n';
        }
        for (std::size_t m = 0; m < c.rf->oob_curve.size(); ++m) {
            oob << format_real(c.sigma) << ',' << format_real(c.fraction) << ',' << c.seed << ',' << m + 1 << ','
                << format_real(c.rf->oob_curve[m]) << '\n';
        }
    }
    write_file(out_dir / "importance.csv", imp.str(), written);
    write_file(out_dir / "oob_vs_trees.csv", oob.str(), written);

    std::ostringstream errors;
    bool any_error = false;
    errors << "cell,error\n";
    for (const auto& c : result.cells) {
        if (c.error.empty()) continue;
        any_error = true;
        std::string message = c.error;
        std::replace(message.begin(), message.end(), ',', ';');
        std::replace(message.begin(), message.end(), '\n', ' ');
        errors << c.id() << ',' << message << '\n';
    }
    if (any_error) write_file(out_dir / "errors.csv", errors.str(), written);
    return written;
}

SweepResult read_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "sigma,fraction,classifier,seed,tn,fp,fn,tp,accuracy,seconds") {
        fail(ErrorCode::invalid_argument, path.string() + " lacks the sweep.csv header");
    }
    SweepResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split(line, ',');
        auto bad = [&] { fail(ErrorCode::invalid_argument, "malformed sweep.csv line " + std::to_string(line_no)); };
        if (cells.size() != 10) bad();
        SweepCell c;
        auto sigma = parse_double(cells[0]);
        auto fraction = parse_double(cells[1]);
        auto classifier = parse_classifier(cells[2]);
        if (!sigma || !fraction || !classifier) bad();
        c.sigma = *sigma;
        c.fraction = *fraction;
        c.classifier = *classifier;
        try {
            c.seed = std::stoull(std::string(cells[3]));
            c.cm.tn = std::stoull(std::string(cells[4]));
            c.cm.fp = std::stoull(std::string(cells[5]));
            c.cm.fn = std::stoull(std::string(cells[6]));
            c.cm.tp = std::stoull(std::string(cells[7]));
        } catch (const std::exception&) {
            bad();
        }
        if (cells[8] == "nan") {
            c.error = "failed";
        } else {
            auto acc = parse_double(cells[8]);
            if (!acc) bad();
            c.accuracy = *acc;
        }
        auto seconds = parse_double(cells[9]);
        if (!seconds) bad();
        c.seconds = *seconds;
        result.cells.push_back(std::move(c));
    }
    return result;
}

}  // namespace wsnod
