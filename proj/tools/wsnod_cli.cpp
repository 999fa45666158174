// wsnod command line: ingest, synth, neighbors, features, train, detect, sweep, report.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wsnod/dataset.hpp"
#include "wsnod/error.hpp"
#include "wsnod/eval.hpp"
#include "wsnod/features.hpp"
#include "wsnod/forest.hpp"
#include "wsnod/ingest.hpp"
#include "wsnod/neighbors.hpp"
#include "wsnod/noise.hpp"
#include "wsnod/numfmt.hpp"
#include "wsnod/pipeline.hpp"

namespace fs = std::filesystem;
using namespace wsnod;

namespace {

struct Options {
    RunConfig run;
    std::string readings, locations, table;
    std::string attribute = "temperature";
    std::string noise_attr;
    std::string entropy = "total";
    std::string history = "vetted";
    std::string pairing = "neighbor";
    std::vector<std::string> classifiers;
    std::string out;
    std::string features_path;
    std::string forest_path;
    std::string sweep_path;
    bool dry_run = false;
    bool search = false;
    int trials = 2000;
};

[[noreturn]] void usage_error(const std::string& message) { fail(ErrorCode::config_error, message); }

template <typename T>
T parse_enum(const std::string& text, std::initializer_list<std::pair<const char*, T>> names, const char* flag) {
    for (const auto& [name, value] : names) {
        if (text == name) return value;
    }
    usage_error(std::string("unknown value for ") + flag + ": " + text);
}

void write_json_error(ErrorCode code, const std::string& message) {
    nlohmann::json record{{"error", std::string(to_string(code))}, {"message", message}};
    std::cerr << record.dump() << '\n';
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
    return out;
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) usage_error(std::string(flag) + " is required");
    if (!fs::is_regular_file(path)) usage_error(std::string("file not found: ") + path);
}

// Input options shared by every stage that reads a trace.
void add_input(CLI::App* cmd, Options& o) {
    cmd->add_option("--readings", o.readings, "Trace file (date time epoch moteid temp hum light volt)");
    cmd->add_option("--locations", o.locations, "Mote locations file (moteid x y)");
    cmd->add_flag("--synth", o.run.synth, "Use the synthetic grid benchmark instead of files");
    cmd->add_option("--nodes", o.run.synth_config.n_nodes, "Synthetic node count")->capture_default_str();
    cmd->add_option("--epochs", o.run.synth_config.n_epochs, "Synthetic epoch count")->capture_default_str();
    cmd->add_option("--spacing", o.run.synth_config.grid_spacing, "Synthetic grid spacing (m)")->capture_default_str();
    cmd->add_option("--jitter", o.run.synth_config.jitter, "Synthetic per-node noise")->capture_default_str();
    cmd->add_option("--synth-seed", o.run.synth_config.seed, "Synthetic generator seed")->capture_default_str();
    cmd->add_option("--first-row", o.run.load.first_row, "Skip trace lines before this index");
    cmd->add_option("--max-rows", o.run.load.max_rows, "Read at most this many trace lines");
    cmd->add_option("--node-ids", o.run.load.nodes, "Keep only these motes")->delimiter(',');
}

void add_features(CLI::App* cmd, Options& o) {
    cmd->add_option("--attribute", o.attribute, "Attribute to classify")->capture_default_str();
    cmd->add_option("--noise-attr", o.noise_attr, "Attribute to corrupt, or 'all'");
    cmd->add_option("--window", o.run.window, "Window length W")->capture_default_str();
    cmd->add_option("--k", o.run.neighbor_k, "Candidate neighbors per node")->capture_default_str();
    cmd->add_option("--table", o.table, "Neighbor table file overriding geometric k-NN");
    cmd->add_option("--entropy", o.entropy, "total | max-term")->capture_default_str();
    cmd->add_option("--history", o.history, "vetted | observed")->capture_default_str();
    cmd->add_option("--pairing", o.pairing, "neighbor | lagged")->capture_default_str();
}

void add_forest(CLI::App* cmd, Options& o) {
    auto& f = o.run.forest;
    cmd->add_option("--trees", f.n_trees, "Number of trees")->capture_default_str();
    cmd->add_option("--max-depth", f.tree.max_depth, "Maximum depth, <= 0 for unlimited")->capture_default_str();
    cmd->add_option("--min-leaf", f.tree.min_leaf, "Minimum rows per leaf")->capture_default_str();
    cmd->add_option("--mtry", f.tree.mtry, "Features tried per split, 0 for ceil(sqrt(p))")->capture_default_str();
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", "Key = value file holding any of these options (command line wins)");
    cmd->add_option("--jobs", o.run.jobs, "Worker threads, 0 for all cores")->capture_default_str();
    cmd->add_flag("--dry-run", o.dry_run, "Validate and print the plan without writing anything");
}

// Turns the string-valued options into the typed RunConfig and validates it.
void resolve(Options& o, bool needs_input) {
    auto& r = o.run;
    if (!o.readings.empty()) r.readings = o.readings;
    if (!o.locations.empty()) r.locations = o.locations;
    if (!o.table.empty()) r.table_path = o.table;
    auto attr = parse_attribute(o.attribute);
    if (!attr) usage_error("unknown attribute: " + o.attribute);
    r.attribute = *attr;
    if (o.noise_attr == "all") {
        r.noise_all_attributes = true;
    } else if (!o.noise_attr.empty()) {
        auto noise = parse_attribute(o.noise_attr);
        if (!noise) usage_error("unknown --noise-attr: " + o.noise_attr);
        r.attribute = *noise;
    }
    r.entropy = parse_enum<EntropyMode>(o.entropy, {{"total", EntropyMode::total}, {"max-term", EntropyMode::max_term}},
                                        "--entropy");
    r.history = parse_enum<HistoryMode>(o.history, {{"vetted", HistoryMode::vetted}, {"observed", HistoryMode::observed}},
                                        "--history");
    r.pairing = parse_enum<Pairing>(o.pairing, {{"neighbor", Pairing::neighbor}, {"lagged", Pairing::lagged}},
                                    "--pairing");
    if (!o.classifiers.empty()) {
        r.grid.classifiers.clear();
        for (const auto& name : o.classifiers) {
            auto c = parse_classifier(name);
            if (!c) usage_error("unknown classifier: " + name);
            r.grid.classifiers.push_back(*c);
        }
    }
    if (!o.out.empty()) r.out_dir = o.out;
    if (needs_input) r.validate();
}

int cmd_ingest(Options& o) {
    require_file(o.readings, "--readings");
    require_file(o.locations, "--locations");
    if (o.out.empty()) usage_error("--out is required");
    if (o.dry_run) {
        std::cout << "command: ingest\ninput: readings=" << o.readings << " locations=" << o.locations
                  << "\noutput: " << o.out << '\n';
        return 0;
    }
    auto loaded = load_trace(o.readings, o.locations, o.run.load);
    fs::create_directories(o.out);
    auto readings = open_output(fs::path(o.out) / "readings.txt");
    write_readings(loaded.trace, readings);
    auto locs = open_output(fs::path(o.out) / "locations.txt");
    write_locations(loaded.trace.locations, locs);
    const auto& s = loaded.stats;
    nlohmann::json summary{{"lines", s.lines},         {"rejected", s.rejected}, {"duplicates", s.duplicates},
                           {"unlocated", s.unlocated}, {"filtered", s.filtered}, {"kept", loaded.trace.readings.size()},
                           {"nodes", loaded.trace.node_ids().size()}};
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_synth(Options& o) {
    o.run.synth = true;
    resolve(o, true);
    if (o.out.empty()) usage_error("--out is required");
    if (o.dry_run) {
        std::cout << "command: synth\nnodes=" << o.run.synth_config.n_nodes << " epochs=" << o.run.synth_config.n_epochs
                  << "\noutput: " << o.out << '\n';
        return 0;
    }
    Trace trace = synthesize_trace(o.run.synth_config);
    fs::create_directories(o.out);
    auto readings = open_output(fs::path(o.out) / "readings.txt");
    write_readings(trace, readings);
    auto locs = open_output(fs::path(o.out) / "locations.txt");
    write_locations(trace.locations, locs);
    return 0;
}

int cmd_neighbors(Options& o) {
    if (o.run.neighbor_k < 1 || o.run.neighbor_k > 10) usage_error("--k must lie in 1..10");
    if (o.search) {
        resolve(o, true);
    } else if (!o.run.synth) {
        require_file(o.locations, "--locations");
    }
    if (o.dry_run) {
        std::cout << "command: neighbors\nk=" << o.run.neighbor_k << (o.search ? " search=monte-carlo" : "")
                  << "\noutput: " << (o.out.empty() ? "-" : o.out) << '\n';
        return 0;
    }
    if (o.search) {
        MonteCarloConfig mc;
        mc.trials = o.trials;
        mc.seed = o.run.grid.seeds.front();
        mc.attribute = o.run.attribute;
        auto result = monte_carlo_neighbor_count(load_input(o.run), mc);
        nlohmann::json summary{{"best_k", result.best_k},
                               {"candidates", result.candidates},
                               {"mean_abs_error", result.mean_abs_error},
                               {"penalized_error", result.penalized_error}};
        std::cout << summary.dump() << '\n';
        return 0;
    }
    std::vector<MoteLocation> locations =
        o.run.synth ? synthesize_trace(o.run.synth_config).locations : load_locations(o.locations);
    NeighborTable table = k_nearest_by_distance(locations, o.run.neighbor_k);
    if (o.out.empty()) {
        write_neighbor_table(table, std::cout);
    } else {
        auto out = open_output(o.out);
        write_neighbor_table(table, out);
    }
    return 0;
}

int cmd_features(Options& o) {
    resolve(o, true);
    if (o.out.empty()) usage_error("--out is required");
    const double sigma = o.run.grid.sigmas.front();
    const double fraction = o.run.grid.fractions.front();
    const auto seed = o.run.grid.seeds.front();
    if (o.dry_run) {
        std::cout << o.run.plan("features") << "feature csv: " << o.out << '\n';
        return 0;
    }
    const Trace trace = load_input(o.run);
    PipelineConfig p = o.run.pipeline();
    FeatureBuildStats stats;
    FeatureMatrix matrix = prepare_features(trace, sigma, fraction, seed, p, &stats);
    auto out = open_output(o.out);
    write_feature_csv(matrix, out);
    nlohmann::json summary{{"rows", stats.emitted}, {"short_history", stats.short_history}, {"unaligned", stats.unaligned}};
    std::cout << summary.dump() << '\n';
    return 0;
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot read " + path);
    return Dataset::from(read_feature_csv(in));
}

int cmd_train(Options& o) {
    require_file(o.features_path, "--features");
    const bool apply = !o.forest_path.empty();
    if (apply) require_file(o.forest_path, "--forest");
    if (!apply && o.out.empty()) usage_error("--out (model file) or --forest (existing model) is required");
    if (o.dry_run) {
        std::cout << "command: train\nfeatures: " << o.features_path << '\n'
                  << (apply ? "apply forest: " + o.forest_path : "write forest: " + o.out) << '\n';
        return 0;
    }
    Dataset data = read_dataset(o.features_path);
    if (apply) {
        std::ifstream in(o.forest_path);
        Forest forest = Forest::read(in);
        if (forest.feature_names != data.feature_names) fail(ErrorCode::invalid_argument, "feature columns differ from the model");
        auto cm = ConfusionMatrix::tally(data.labels, forest.predict(data));
        nlohmann::json summary{{"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}, {"tp", cm.tp}, {"accuracy", accuracy(cm)}};
        std::cout << summary.dump() << '\n';
        return 0;
    }
    ForestParams params = o.run.forest;
    params.seed = o.run.grid.seeds.front();
    params.jobs = o.run.jobs;
    Forest forest = fit_forest(data, params);
    auto out = open_output(o.out);
    forest.write(out);
    nlohmann::json summary{{"trees", forest.trees.size()}, {"rows", data.rows()}, {"oob_error", oob_error(forest, data)}};
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_detect(Options& o, const char* name) {
    resolve(o, true);
    if (o.dry_run) {
        std::cout << o.run.plan(name);
        return 0;
    }
    for (const auto& path : run_detect(o.run)) std::cout << path.string() << '\n';
    return 0;
}

int cmd_report(Options& o) {
    require_file(o.sweep_path, "--sweep");
    if (o.out.empty()) usage_error("--out is required");
    if (o.dry_run) {
        std::cout << "command: report\nsweep: " << o.sweep_path << "\noutput: " << o.out << '\n';
        return 0;
    }
    SweepResult result = read_sweep_csv(o.sweep_path);
    std::vector<double> sigmas;
    for (const auto& c : result.cells) {
        if (std::find(sigmas.begin(), sigmas.end(), c.sigma) == sigmas.end()) sigmas.push_back(c.sigma);
    }
    fs::create_directories(o.out);
    for (double s : sigmas) {
        fs::path path = fs::path(o.out) / ("accuracy_vs_fraction_sigma" + format_real(s) + ".svg");
        auto out = open_output(path);
        out << render_accuracy_svg(result, s);
        std::cout << path.string() << '\n';
    }
    return 0;
}

// Expands `--config FILE` into `--key value` arguments for keys not already on the command line.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end()) return args;
    if (std::next(it) == args.end()) usage_error("--config needs a file");
    const std::string path = *std::next(it);
    args.erase(it, it + 2);
    std::ifstream in(path);
    if (!in) usage_error("config file not found: " + path);

    std::vector<std::string> extra;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string_view v) {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
        return std::string(v);
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) usage_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::string value = trim(std::string_view(body).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        const std::string flag = "--" + key;
        if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
        if (value == "true") {
            extra.push_back(flag);
        } else if (value != "false") {
            extra.push_back(flag);
            extra.push_back(value);
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Global outlier detection for wireless sensor network traces"};
    app.require_subcommand(1);
    Options o;

    auto* ingest = app.add_subcommand("ingest", "Load, filter and normalize a trace");
    add_input(ingest, o);
    ingest->add_option("--out", o.out, "Output directory");
    add_common(ingest, o);

    auto* synth = app.add_subcommand("synth", "Write the synthetic benchmark trace");
    add_input(synth, o);
    synth->add_option("--out", o.out, "Output directory");
    add_common(synth, o);

    auto* neighbors = app.add_subcommand("neighbors", "Geometric k-NN table or Monte-Carlo neighbor count");
    add_input(neighbors, o);
    neighbors->add_option("--k", o.run.neighbor_k, "Neighbors per node")->capture_default_str();
    neighbors->add_flag("--search", o.search, "Estimate the neighbor count instead (needs a trace)");
    neighbors->add_option("--trials", o.trials, "Monte-Carlo trials")->capture_default_str();
    neighbors->add_option("--seed", o.run.grid.seeds, "Monte-Carlo seed")->expected(1);
    neighbors->add_option("--attribute", o.attribute, "Attribute for the search")->capture_default_str();
    neighbors->add_option("--out", o.out, "Table file (stdout when omitted)");
    add_common(neighbors, o);

    auto* features = app.add_subcommand("features", "Inject noise and write the feature CSV");
    add_input(features, o);
    add_features(features, o);
    features->add_option("--sigma", o.run.grid.sigmas, "Noise standard deviation")->expected(1);
    features->add_option("--noise-fraction", o.run.grid.fractions, "Share of corrupted readings")->expected(1);
    features->add_option("--seed", o.run.grid.seeds, "Noise seed")->expected(1);
    features->add_option("--out", o.out, "Feature CSV path");
    add_common(features, o);

    auto* train = app.add_subcommand("train", "Fit a forest on a feature CSV, or apply a saved one");
    add_forest(train, o);
    train->add_option("--features", o.features_path, "Feature CSV");
    train->add_option("--forest", o.forest_path, "Saved forest to apply instead of training");
    train->add_option("--seed", o.run.grid.seeds, "Forest seed")->expected(1);
    train->add_option("--out", o.out, "Where to save the trained forest");
    add_common(train, o);

    auto add_pipeline = [&](CLI::App* cmd) {
        add_input(cmd, o);
        add_features(cmd, o);
        add_forest(cmd, o);
        cmd->add_option("--sigma", o.run.grid.sigmas, "Noise standard deviations")->delimiter(',');
        cmd->add_option("--noise-fraction", o.run.grid.fractions, "Corrupted shares")->delimiter(',');
        cmd->add_option("--seed", o.run.grid.seeds, "Seeds (noise, split, forest)")->delimiter(',');
        cmd->add_option("--classifier", o.classifiers, "rf, knn, nb")->delimiter(',');
        cmd->add_option("--knn-k", o.run.knn_k, "kNN neighbors (odd)")->capture_default_str();
        cmd->add_option("--test-fraction", o.run.test_fraction, "Held-out share")->capture_default_str();
        cmd->add_option("--out", o.out, "Report directory")->capture_default_str();
        cmd->add_flag("--timing", o.run.timing, "Record wall time in sweep.csv");
        add_common(cmd, o);
    };
    auto* detect = app.add_subcommand("detect", "Full pipeline for one noise setting");
    add_pipeline(detect);
    auto* sweep = app.add_subcommand("sweep", "Full pipeline over a sigma x fraction x classifier x seed grid");
    add_pipeline(sweep);

    auto* report = app.add_subcommand("report", "Redraw accuracy charts from a sweep.csv");
    report->add_option("--sweep", o.sweep_path, "sweep.csv from detect or sweep");
    report->add_option("--out", o.out, "Output directory");
    add_common(report, o);

    try {
        try {
            auto args = expand_config(argc, argv);
            args.erase(args.begin());
            std::reverse(args.begin(), args.end());
            app.parse(std::move(args));
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            usage_error(e.what());
        }

        if (*ingest) return cmd_ingest(o);
        if (*synth) return cmd_synth(o);
        if (*neighbors) return cmd_neighbors(o);
        if (*features) return cmd_features(o);
        if (*train) return cmd_train(o);
        if (*report) return cmd_report(o);

        // detect compares all three classifiers at one setting; sweep defaults to the wider grid.
        if (o.classifiers.empty()) o.classifiers = {"rf", "knn", "nb"};
        if (*sweep) {
            if (sweep->count("--sigma") == 0) o.run.grid.sigmas = {5.0, 7.5, 10.0};
            if (sweep->count("--noise-fraction") == 0) o.run.grid.fractions = {0.10, 0.15, 0.20, 0.30, 0.40, 0.50};
            return cmd_detect(o, "sweep");
        }
        return cmd_detect(o, "detect");
    } catch (const Error& e) {
        write_json_error(e.code(), e.what());
        return e.code() == ErrorCode::config_error ? 2 : 1;
    } catch (const fs::filesystem_error& e) {
        write_json_error(ErrorCode::io_error, e.what());
        return 1;
    } catch (const std::exception& e) {
        write_json_error(ErrorCode::invalid_argument, e.what());
        return 1;
    }
}
