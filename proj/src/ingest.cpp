#include "wsnod/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "wsnod/error.hpp"
#include "wsnod/numfmt.hpp"

namespace wsnod {

std::string_view to_string(Attribute attribute) {
    switch (attribute) {
        case Attribute::temperature: return "temperature";
        case Attribute::humidity: return "humidity";
        case Attribute::light: return "light";
        case Attribute::voltage: return "voltage";
    }
    return "unknown";
}

std::optional<Attribute> parse_attribute(std::string_view name) {
    for (Attribute a : kAllAttributes) {
        if (to_string(a) == name) return a;
    }
    return std::nullopt;
}

double SensorReading::value(Attribute attribute) const {
    switch (attribute) {
        case Attribute::temperature: return temperature;
        case Attribute::humidity: return humidity;
        case Attribute::light: return light;
        case Attribute::voltage: return voltage;
    }
    return 0.0;
}

void SensorReading::set_value(Attribute attribute, double v) {
    switch (attribute) {
        case Attribute::temperature: temperature = v; break;
        case Attribute::humidity: humidity = v; break;
        case Attribute::light: light = v; break;
        case Attribute::voltage: voltage = v; break;
    }
}

std::vector<int> Trace::node_ids() const {
    std::vector<int> ids;
    for (const auto& r : readings) {
        if (ids.empty() || ids.back() != r.mote_id) ids.push_back(r.mote_id);
    }
    return ids;
}

const MoteLocation* Trace::location(int mote_id) const {
    auto it = std::lower_bound(locations.begin(), locations.end(), mote_id,
                               [](const MoteLocation& l, int id) { return l.mote_id < id; });
    if (it == locations.end() || it->mote_id != mote_id) return nullptr;
    return &*it;
}

namespace {

template <typename T>
bool parse_int(std::string_view s, T& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_date(std::string_view s, Date& d) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    return parse_int(s.substr(0, 4), d.year) && parse_int(s.substr(5, 2), d.month) &&
           parse_int(s.substr(8, 2), d.day) && d.month >= 1 && d.month <= 12 && d.day >= 1 &&
           d.day <= 31;
}

// hh:mm:ss with an optional fraction of up to six digits.
bool parse_time(std::string_view s, TimeOfDay& t) {
    if (s.size() < 8 || s[2] != ':' || s[5] != ':') return false;
    if (!parse_int(s.substr(0, 2), t.hour) || !parse_int(s.substr(3, 2), t.minute) ||
        !parse_int(s.substr(6, 2), t.second)) {
        return false;
    }
    if (t.hour > 23 || t.minute > 59 || t.second > 60) return false;
    t.microsecond = 0;
    if (s.size() == 8) return true;
    if (s[8] != '.') return false;
    auto frac = s.substr(9);
    if (frac.empty() || frac.size() > 6) return false;
    int value = 0;
    if (!parse_int(frac, value)) return false;
    for (std::size_t i = frac.size(); i < 6; ++i) value *= 10;
    t.microsecond = value;
    return true;
}

std::size_t split_fields(std::string_view line, std::array<std::string_view, 9>& fields) {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (n == fields.size()) return n + 1;
        fields[n++] = line.substr(i, j - i);
        i = j;
    }
    return n;
}

}  // namespace

std::optional<SensorReading> parse_reading_line(std::string_view line) {
    std::array<std::string_view, 9> f;
    if (split_fields(line, f) != 8) return std::nullopt;
    SensorReading r;
    if (!parse_date(f[0], r.date) || !parse_time(f[1], r.time)) return std::nullopt;
    if (!parse_int(f[2], r.epoch) || r.epoch < 0) return std::nullopt;
    if (!parse_int(f[3], r.mote_id) || r.mote_id < 1) return std::nullopt;
    if (!parse_real(f[4], r.temperature) || !parse_real(f[5], r.humidity) ||
        !parse_real(f[6], r.light) || !parse_real(f[7], r.voltage)) {
        return std::nullopt;
    }
    return r;
}

std::string format_reading_line(const SensorReading& r) {
    char stamp[48];
    std::snprintf(stamp, sizeof stamp, "%04d-%02d-%02d %02d:%02d:%02d.%06d", r.date.year, r.date.month,
                  r.date.day, r.time.hour, r.time.minute, r.time.second, r.time.microsecond);
    std::string line = stamp;
    line += ' ';
    line += std::to_string(r.epoch);
    line += ' ';
    line += std::to_string(r.mote_id);
    for (double v : {r.temperature, r.humidity, r.light, r.voltage}) {
        line += ' ';
        line += format_real(v);
    }
    return line;
}

std::vector<MoteLocation> parse_locations(std::istream& in) {
    std::vector<MoteLocation> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::array<std::string_view, 9> f;
        std::size_t n = split_fields(line, f);
        if (n == 0) continue;
        MoteLocation loc;
        if (n != 3 || !parse_int(f[0], loc.mote_id) || !parse_real(f[1], loc.x) ||
            !parse_real(f[2], loc.y)) {
            fail(ErrorCode::invalid_argument, "malformed location line " + std::to_string(line_no));
        }
        out.push_back(loc);
    }
    std::sort(out.begin(), out.end(),
              [](const MoteLocation& a, const MoteLocation& b) { return a.mote_id < b.mote_id; });
    auto dup = std::adjacent_find(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.mote_id == b.mote_id;
    });
    if (dup != out.end()) {
        fail(ErrorCode::invalid_argument, "duplicate mote id " + std::to_string(dup->mote_id));
    }
    return out;
}

std::vector<MoteLocation> load_locations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot read " + path.string());
    return parse_locations(in);
}

Trace assemble_trace(std::vector<SensorReading> readings, std::vector<MoteLocation> locations,
                     LoadStats* stats) {
    Trace trace;
    std::sort(locations.begin(), locations.end(),
              [](const MoteLocation& a, const MoteLocation& b) { return a.mote_id < b.mote_id; });
    trace.locations = std::move(locations);

    std::size_t unlocated = 0;
    std::erase_if(readings, [&](const SensorReading& r) {
        bool drop = trace.location(r.mote_id) == nullptr;
        unlocated += drop;
        return drop;
    });
    std::stable_sort(readings.begin(), readings.end(), [](const auto& a, const auto& b) {
        return a.mote_id != b.mote_id ? a.mote_id < b.mote_id : a.epoch < b.epoch;
    });
    auto last = std::unique(readings.begin(), readings.end(), [](const auto& a, const auto& b) {
        return a.mote_id == b.mote_id && a.epoch == b.epoch;
    });
    std::size_t duplicates = static_cast<std::size_t>(readings.end() - last);
    readings.erase(last, readings.end());
    trace.readings = std::move(readings);

    if (stats) {
        stats->unlocated += unlocated;
        stats->duplicates += duplicates;
    }
    return trace;
}

LoadedTrace load_trace(const std::filesystem::path& readings_path,
                       const std::filesystem::path& locations_path, const LoadOptions& options) {
    std::ifstream in(readings_path);
    if (!in) fail(ErrorCode::io_error, "cannot read " + readings_path.string());
    auto locations = load_locations(locations_path);

    LoadStats stats;
    std::vector<SensorReading> readings;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::size_t this_row = row++;
        if (this_row < options.first_row) continue;
        if (options.max_rows && this_row - options.first_row >= *options.max_rows) break;
        ++stats.lines;
        auto reading = parse_reading_line(line);
        if (!reading) {
            ++stats.rejected;
            continue;
        }
        if (!options.nodes.empty() &&
            std::find(options.nodes.begin(), options.nodes.end(), reading->mote_id) ==
                options.nodes.end()) {
            ++stats.filtered;
            continue;
        }
        readings.push_back(*reading);
    }

    LoadedTrace loaded{assemble_trace(std::move(readings), std::move(locations), &stats), stats};
    if (loaded.trace.readings.empty()) {
        fail(ErrorCode::empty_trace, "no valid readings in " + readings_path.string());
    }
    return loaded;
}

void write_readings(const Trace& trace, std::ostream& out) {
    for (const auto& r : trace.readings) out << format_reading_line(r) << '\n';
}

void write_locations(std::span<const MoteLocation> locations, std::ostream& out) {
    for (const auto& l : locations) {
        out << l.mote_id << ' ' << format_real(l.x) << ' ' << format_real(l.y) << '\n';
    }
}

namespace {

int days_in_month(int year, int month) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return month == 2 && leap ? 29 : kDays[month - 1];
}

// Deployment start, 31 s nominal cadence.
void stamp_epoch(std::int64_t epoch, Date& date, TimeOfDay& time) {
    date = {2004, 2, 28};
    std::int64_t seconds = epoch * 31;
    std::int64_t days = seconds / 86400;
    seconds %= 86400;
    for (std::int64_t d = 0; d < days; ++d) {
        if (++date.day > days_in_month(date.year, date.month)) {
            date.day = 1;
            if (++date.month > 12) {
                date.month = 1;
                ++date.year;
            }
        }
    }
    time.hour = static_cast<int>(seconds / 3600);
    time.minute = static_cast<int>(seconds / 60 % 60);
    time.second = static_cast<int>(seconds % 60);
    time.microsecond = 0;
}

struct BaseSignal {
    double level;
    double amplitude;
    double phase;
    double drift;
};

// Slow cycle plus a faster harmonic so every 10-sample window has visible shape.
double base_value(const BaseSignal& s, std::int64_t epoch) {
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    double t = static_cast<double>(epoch);
    return s.level + s.amplitude * std::sin(kTwoPi * t / 120.0 + s.phase) +
           0.5 * s.amplitude * std::sin(kTwoPi * t / 17.0 + 2.0 * s.phase) + s.drift * t;
}

}  // namespace

Trace synthesize_trace(const SynthConfig& config) {
    if (config.n_nodes < 2) fail(ErrorCode::invalid_argument, "synthesize_trace needs n_nodes >= 2");
    if (config.n_epochs < 10) fail(ErrorCode::invalid_argument, "synthesize_trace needs n_epochs >= 10");
    if (!(config.grid_spacing > 0.0) || !(config.jitter >= 0.0)) {
        fail(ErrorCode::invalid_argument, "synthesize_trace needs grid_spacing > 0 and jitter >= 0");
    }

    static constexpr std::array<BaseSignal, 4> kSignals{{
        {21.0, 3.0, 0.0, 2e-4},     // temperature
        {38.0, 4.0, 2.1, -3e-4},    // humidity
        {320.0, 140.0, 0.9, 0.0},   // light
        {2.70, 0.02, 1.3, -1e-5},   // voltage
    }};

    int columns = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(config.n_nodes))));
    std::vector<MoteLocation> locations;
    for (int i = 0; i < config.n_nodes; ++i) {
        locations.push_back({i + 1, (i % columns) * config.grid_spacing, (i / columns) * config.grid_spacing});
    }

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<SensorReading> readings;
    readings.reserve(static_cast<std::size_t>(config.n_nodes) * static_cast<std::size_t>(config.n_epochs));
    for (int node = 1; node <= config.n_nodes; ++node) {
        for (std::int64_t epoch = 0; epoch < config.n_epochs; ++epoch) {
            SensorReading r;
            stamp_epoch(epoch, r.date, r.time);
            r.epoch = epoch;
            r.mote_id = node;
            for (std::size_t a = 0; a < kAllAttributes.size(); ++a) {
                double noise = gauss(rng);
                r.set_value(kAllAttributes[a], base_value(kSignals[a], epoch) +
                                                   config.jitter * kSignals[a].amplitude * noise);
            }
            readings.push_back(r);
        }
    }
    return assemble_trace(std::move(readings), std::move(locations));
}

TraceIndex::TraceIndex(const Trace& trace) : trace_(&trace) {
    const auto& rs = trace.readings;
    std::size_t i = 0;
    while (i < rs.size()) {
        std::size_t j = i;
        while (j < rs.size() && rs[j].mote_id == rs[i].mote_id) ++j;
        ranges_.push_back({rs[i].mote_id, i, j});
        i = j;
    }
}

const TraceIndex::Range* TraceIndex::range(int mote_id) const {
    auto it = std::lower_bound(ranges_.begin(), ranges_.end(), mote_id,
                               [](const Range& r, int id) { return r.mote_id < id; });
    if (it == ranges_.end() || it->mote_id != mote_id) return nullptr;
    return &*it;
}

std::optional<std::size_t> TraceIndex::find(int mote_id, std::int64_t epoch) const {
    const Range* r = range(mote_id);
    if (!r) return std::nullopt;
    const auto& rs = trace_->readings;
    auto first = rs.begin() + static_cast<std::ptrdiff_t>(r->begin);
    auto last = rs.begin() + static_cast<std::ptrdiff_t>(r->end);
    auto it = std::lower_bound(first, last, epoch,
                               [](const SensorReading& s, std::int64_t e) { return s.epoch < e; });
    if (it == last || it->epoch != epoch) return std::nullopt;
    return static_cast<std::size_t>(it - rs.begin());
}

std::optional<std::size_t> TraceIndex::find_near(int mote_id, std::int64_t epoch) const {
    if (auto i = find(mote_id, epoch)) return i;
    if (auto i = find(mote_id, epoch - 1)) return i;
    return find(mote_id, epoch + 1);
}

}  // namespace wsnod
