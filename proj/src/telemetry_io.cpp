#include "sentinel/telemetry_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sentinel/digest.hpp"
#include "sentinel/errors.hpp"

namespace sentinel {

namespace {

using nlohmann::json;

struct Sample {
    double timestamp = 0.0;
    double value = 0.0;
};

bool parse_double(std::string_view text, double& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (text.empty()) {
        return false;
    }
    const auto result = std::from_chars(text.data(), text.data() + text.size(), out);
    return result.ec == std::errc{} && result.ptr == text.data() + text.size();
}

std::string trim(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    return std::string(text);
}

using SampleMap = std::map<std::string, std::vector<Sample>>;

SampleMap read_csv(std::istream& in) {
    SampleMap samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw MalformedRow("line " + std::to_string(line_no) + ": expected 3 columns");
        }
        const std::string id = trim(std::string_view(line).substr(0, c1));
        double ts = 0.0;
        double value = 0.0;
        const bool ts_ok =
            parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), ts);
        const bool value_ok = parse_double(std::string_view(line).substr(c2 + 1), value);
        if (!ts_ok || !value_ok) {
            if (line_no == 1) {
                continue;  // header row
            }
            throw MalformedRow("line " + std::to_string(line_no) + ": bad number in '" + line +
                               "'");
        }
        if (id.empty()) {
            throw MalformedRow("line " + std::to_string(line_no) + ": empty series_id");
        }
        samples[id].push_back({ts, value});
    }
    return samples;
}

SampleMap read_jsonl(std::istream& in) {
    SampleMap samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRow("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!row.is_object() || !row.contains("series_id") || !row.contains("timestamp") ||
            !row.contains("value") || !row["series_id"].is_string() ||
            !row["timestamp"].is_number()) {
            throw MalformedRow("line " + std::to_string(line_no) +
                               ": need series_id/timestamp/value");
        }
        double value = std::numeric_limits<double>::quiet_NaN();
        if (row["value"].is_number()) {
            value = row["value"].get<double>();
        } else if (!row["value"].is_null()) {
            throw MalformedRow("line " + std::to_string(line_no) + ": value must be a number");
        }
        samples[row["series_id"].get<std::string>()].push_back(
            {row["timestamp"].get<double>(), value});
    }
    return samples;
}

// Converts one series' raw samples into grid-aligned segments, applying the
// gap policy. Missing (NaN/inf) values count as absent samples.
std::vector<Series> to_segments(const std::string& id, std::vector<Sample> samples,
                                const GapPolicy& policy) {
    samples.erase(std::remove_if(samples.begin(), samples.end(),
                                 [](const Sample& s) { return !std::isfinite(s.value); }),
                  samples.end());
    if (samples.empty()) {
        return {};
    }
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });

    if (samples.size() == 1) {
        Series s;
        s.series_id = id;
        s.sampling_interval = 0.0;  // resolved against the fleet later
        s.start_timestamp = 0;
        s.values = {samples[0].value};
        return {s};
    }

    // Base interval: smallest positive step; every step must be an integer
    // multiple of it within 1%.
    double base = 0.0;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const double step = samples[k].timestamp - samples[k - 1].timestamp;
        if (step <= 0.0) {
            throw NonUniformSampling("series '" + id + "': duplicate timestamp " +
                                     std::to_string(samples[k].timestamp));
        }
        if (base == 0.0 || step < base) {
            base = step;
        }
    }

    std::vector<Series> segments;
    Series current;
    current.series_id = id;
    current.sampling_interval = base;
    current.start_timestamp = static_cast<std::int64_t>(std::llround(samples[0].timestamp / base));
    current.values = {samples[0].value};

    for (std::size_t k = 1; k < samples.size(); ++k) {
        const double step = samples[k].timestamp - samples[k - 1].timestamp;
        const double ratio = step / base;
        const auto multiple = static_cast<std::int64_t>(std::llround(ratio));
        if (multiple < 1 || std::abs(ratio - static_cast<double>(multiple)) > 0.01) {
            throw NonUniformSampling("series '" + id + "': step " + std::to_string(step) +
                                     " is not a multiple of the base interval " +
                                     std::to_string(base));
        }
        const std::size_t missing = static_cast<std::size_t>(multiple) - 1;
        if (missing == 0) {
            current.values.push_back(samples[k].value);
        } else if (missing <= policy.max_interpolate) {
            const double lo = samples[k - 1].value;
            const double hi = samples[k].value;
            for (std::size_t g = 1; g <= missing; ++g) {
                const double f = static_cast<double>(g) / static_cast<double>(missing + 1);
                current.values.push_back(lo + f * (hi - lo));
            }
            current.values.push_back(samples[k].value);
        } else {
            segments.push_back(std::move(current));
            current = Series{};
            current.series_id = id;
            current.sampling_interval = base;
            current.start_timestamp =
                static_cast<std::int64_t>(std::llround(samples[k].timestamp / base));
            current.values = {samples[k].value};
        }
    }
    segments.push_back(std::move(current));
    return segments;
}

}  // namespace

TelemetryFormat parse_format(const std::string& name) {
    if (name == "csv") {
        return TelemetryFormat::csv;
    }
    if (name == "jsonl") {
        return TelemetryFormat::jsonl;
    }
    throw InvalidConfig("unknown telemetry format '" + name + "' (expected csv or jsonl)");
}

std::vector<Series> parse_telemetry(std::istream& in, TelemetryFormat format,
                                    const GapPolicy& policy) {
    SampleMap samples =
        format == TelemetryFormat::csv ? read_csv(in) : read_jsonl(in);
    if (samples.empty()) {
        throw EmptyInput("telemetry input contains no samples");
    }

    std::vector<Series> fleet;
    for (auto& [id, raw] : samples) {
        auto segments = to_segments(id, std::move(raw), policy);
        fleet.insert(fleet.end(), std::make_move_iterator(segments.begin()),
                     std::make_move_iterator(segments.end()));
    }
    if (fleet.empty()) {
        throw EmptyInput("telemetry input contains no finite samples");
    }

    // Single-sample series cannot carry their own interval; they inherit the
    // fleet's. A fleet made only of such series has no usable timeline.
    double fleet_interval = 0.0;
    for (const Series& s : fleet) {
        if (s.sampling_interval > 0.0) {
            fleet_interval = s.sampling_interval;
            break;
        }
    }
    for (Series& s : fleet) {
        if (s.sampling_interval == 0.0) {
            if (fleet_interval == 0.0) {
                throw NonUniformSampling("cannot infer a sampling interval for series '" +
                                         s.series_id + "'");
            }
            s.sampling_interval = fleet_interval;
        }
    }
    return fleet;
}

std::vector<Series> parse_telemetry_file(const std::string& path, TelemetryFormat format,
                                         const GapPolicy& policy) {
    std::ifstream in(path);
    if (!in) {
        throw EmptyInput("cannot open telemetry file '" + path + "'");
    }
    return parse_telemetry(in, format, policy);
}

void write_csv(const std::vector<Series>& fleet, std::ostream& out) {
    out << "series_id,timestamp,value\n";
    char buffer[64];
    for (const Series& s : fleet) {
        for (std::size_t k = 0; k < s.values.size(); ++k) {
            const double ts =
                static_cast<double>(s.start_timestamp + static_cast<std::int64_t>(k)) *
                s.sampling_interval;
            out << s.series_id << ',';
            std::snprintf(buffer, sizeof(buffer), "%.17g", ts);
            out << buffer << ',';
            std::snprintf(buffer, sizeof(buffer), "%.17g", s.values[k]);
            out << buffer << '\n';
        }
    }
}

std::uint64_t fleet_digest(const std::vector<Series>& fleet) {
    Fnv1a digest;
    for (const Series& s : fleet) {
        digest.update(s.series_id);
        digest.update(s.sampling_interval);
        digest.update(s.start_timestamp);
        digest.update(static_cast<std::uint64_t>(s.values.size()));
        for (double v : s.values) {
            digest.update(v);
        }
    }
    return digest.value();
}

}  // namespace sentinel
