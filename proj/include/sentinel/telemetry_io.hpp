#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sentinel/series.hpp"

namespace sentinel {

enum class TelemetryFormat { csv, jsonl };

TelemetryFormat parse_format(const std::string& name);  // "csv" | "jsonl"

/// Missing-sample policy: gaps of up to max_interpolate samples are filled
/// by linear interpolation; longer gaps split the series into segments that
/// keep the same series_id.
struct GapPolicy {
    std::size_t max_interpolate = 3;
};

/// Reads series_id/timestamp/value rows (CSV columns or one JSON object per
/// line), groups by series, sorts by timestamp, validates uniform sampling
/// within 1%, and applies the gap policy. NaN/infinite values are treated as
/// missing samples. Output is ordered by series_id, then start timestamp.
std::vector<Series> parse_telemetry(std::istream& in, TelemetryFormat format,
                                    const GapPolicy& policy = {});
std::vector<Series> parse_telemetry_file(const std::string& path, TelemetryFormat format,
                                         const GapPolicy& policy = {});

/// CSV emission with round-trip-exact float formatting.
void write_csv(const std::vector<Series>& fleet, std::ostream& out);

/// Stable digest over series identity, grid placement, and exact values;
/// equal for a fleet and its CSV round trip.
std::uint64_t fleet_digest(const std::vector<Series>& fleet);

}  // namespace sentinel
