#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wsnod {

enum class Attribute { temperature, humidity, light, voltage };

inline constexpr std::array<Attribute, 4> kAllAttributes{Attribute::temperature, Attribute::humidity,
                                                         Attribute::light, Attribute::voltage};

std::string_view to_string(Attribute attribute);
std::optional<Attribute> parse_attribute(std::string_view name);

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;
};

struct TimeOfDay {
    int hour = 0;
    int minute = 0;
    int second = 0;
    int microsecond = 0;

    auto operator<=>(const TimeOfDay&) const = default;
};

/// One timestamped measurement from one mote, fields in trace-file order.
struct SensorReading {
    Date date;
    TimeOfDay time;
    std::int64_t epoch = 0;
    int mote_id = 0;
    double temperature = 0.0;
    double humidity = 0.0;
    double light = 0.0;
    double voltage = 0.0;

    double value(Attribute attribute) const;
    void set_value(Attribute attribute, double v);

    bool operator==(const SensorReading&) const = default;
};

struct MoteLocation {
    int mote_id = 0;
    double x = 0.0;
    double y = 0.0;

    bool operator==(const MoteLocation&) const = default;
};

/// Readings sorted by (mote_id, epoch), unique per key, every mote located.
struct Trace {
    std::vector<SensorReading> readings;
    std::vector<MoteLocation> locations;  // sorted by mote_id
    std::array<std::string, 4> attribute_names{"temperature", "humidity", "light", "voltage"};

    std::vector<int> node_ids() const;
    const MoteLocation* location(int mote_id) const;
};

struct LoadStats {
    std::size_t lines = 0;
    std::size_t rejected = 0;
    std::size_t duplicates = 0;
    std::size_t unlocated = 0;
    std::size_t filtered = 0;
};

/// Row-range and node filters applied while reading the trace file.
struct LoadOptions {
    std::size_t first_row = 0;
    std::optional<std::size_t> max_rows;
    std::vector<int> nodes;  // empty keeps every node
};

struct LoadedTrace {
    Trace trace;
    LoadStats stats;
};

/// Parses one whitespace-separated trace line; nullopt means the line is rejected.
std::optional<SensorReading> parse_reading_line(std::string_view line);

/// Inverse of parse_reading_line; shortest round-trip formatting for reals.
std::string format_reading_line(const SensorReading& reading);

std::vector<MoteLocation> parse_locations(std::istream& in);
std::vector<MoteLocation> load_locations(const std::filesystem::path& path);

/// Sorts, de-duplicates (first wins) and drops readings of motes without a location.
Trace assemble_trace(std::vector<SensorReading> readings, std::vector<MoteLocation> locations,
                     LoadStats* stats = nullptr);

LoadedTrace load_trace(const std::filesystem::path& readings_path,
                       const std::filesystem::path& locations_path, const LoadOptions& options = {});

void write_readings(const Trace& trace, std::ostream& out);
void write_locations(std::span<const MoteLocation> locations, std::ostream& out);

struct SynthConfig {
    int n_nodes = 9;
    std::int64_t n_epochs = 2000;
    double grid_spacing = 3.0;
    std::uint64_t seed = 1;
    // Per-node noise, as a fraction of each attribute's base amplitude.
    double jitter = 0.02;
};

/// Grid-placed motes observing a shared sinusoid-plus-drift signal with per-node jitter.
Trace synthesize_trace(const SynthConfig& config);

/// Per-mote contiguous ranges over Trace::readings with epoch lookup.
class TraceIndex {
public:
    struct Range {
        int mote_id;
        std::size_t begin;
        std::size_t end;
    };

    explicit TraceIndex(const Trace& trace);

    std::span<const Range> ranges() const { return ranges_; }
    const Range* range(int mote_id) const;

    /// Index of the reading of `mote_id` at exactly `epoch`.
    std::optional<std::size_t> find(int mote_id, std::int64_t epoch) const;

    /// Exact epoch first, then epoch-1, then epoch+1.
    std::optional<std::size_t> find_near(int mote_id, std::int64_t epoch) const;

private:
    const Trace* trace_;
    std::vector<Range> ranges_;
};

}  // namespace wsnod
