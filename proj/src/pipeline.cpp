#include "sentinel/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <set>

#include "sentinel/digest.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/parallel.hpp"
#include "sentinel/telemetry_io.hpp"

namespace sentinel {

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buffer[19];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(v));
    return buffer;
}

const char* suggested_action(EventKind kind) {
    switch (kind) {
        case EventKind::interest: return "notify_operator";
        case EventKind::no_interest: return "log_only";
        case EventKind::recovery: return "close_paired_incident";
        case EventKind::candidate: return "review";
    }
    return "review";
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

void read_optional_size(const json& j, const char* key, std::optional<std::size_t>& out) {
    if (j.contains(key) && !j.at(key).is_null()) {
        out = j.at(key).get<std::size_t>();
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (m < 2) {
        throw InvalidConfig("config: m must be >= 2");
    }
    if (exclusion_radius && *exclusion_radius < 1) {
        throw InvalidConfig("config: exclusion_radius must be >= 1");
    }
    if (cac_threshold <= 0.0 || cac_threshold >= 1.0) {
        throw InvalidConfig("config: cac_threshold must be in (0, 1)");
    }
    if (regime_exclusion && *regime_exclusion < 1) {
        throw InvalidConfig("config: regime_exclusion must be >= 1");
    }
    if (chunk_length && *chunk_length < 2 * m) {
        throw InvalidConfig("config: chunk_length must be at least 2m");
    }
    if (bin_width < 1) {
        throw InvalidConfig("config: bin_width must be >= 1");
    }
    if (k_mad < 0.0) {
        throw InvalidConfig("config: k_mad must be >= 0");
    }
    if (min_fraction < 0.0 || min_fraction > 1.0) {
        throw InvalidConfig("config: min_fraction must be in [0, 1]");
    }
    if (baseline_window < 1) {
        throw InvalidConfig("config: baseline_window must be >= 1");
    }
    if (spike_window < 1) {
        throw InvalidConfig("config: spike_window must be >= 1");
    }
    if (recovery_horizon < 1) {
        throw InvalidConfig("config: recovery_horizon must be >= 1");
    }
    if (no_interest_threshold < 1) {
        throw InvalidConfig("config: no_interest_threshold must be >= 1");
    }
    if (sampling_interval <= 0.0) {
        throw InvalidConfig("config: sampling_interval must be > 0");
    }
}

SegmentationParams PipelineConfig::segmentation() const {
    SegmentationParams params;
    params.m = m;
    params.exclusion_radius = exclusion_radius;
    params.edge_exclusion = edge_exclusion;
    params.cac_threshold = cac_threshold;
    params.regime_exclusion = regime_exclusion;
    params.chunk_length = chunk_length;
    return params;
}

SpikeParams PipelineConfig::spikes() const {
    SpikeParams params;
    params.baseline_window = baseline_window;
    params.k_mad = k_mad;
    params.min_fraction = min_fraction;
    params.spike_window = spike_window;
    return params;
}

json PipelineConfig::to_json() const {
    json j;
    j["m"] = m;
    j["exclusion_radius"] = exclusion_radius ? json(*exclusion_radius) : json(nullptr);
    j["edge_exclusion"] = edge_exclusion ? json(*edge_exclusion) : json(nullptr);
    j["cac_threshold"] = cac_threshold;
    j["regime_exclusion"] = regime_exclusion ? json(*regime_exclusion) : json(nullptr);
    j["chunk_length"] = chunk_length ? json(*chunk_length) : json(nullptr);
    j["bin_width"] = bin_width;
    j["k_mad"] = k_mad;
    j["min_fraction"] = min_fraction;
    j["baseline_window"] = baseline_window;
    j["spike_window"] = spike_window;
    j["recovery_horizon"] = recovery_horizon;
    j["no_interest_threshold"] = no_interest_threshold;
    j["sampling_interval"] = sampling_interval;
    j["threads"] = threads;
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    static const std::set<std::string> known = {
        "m",           "exclusion_radius", "edge_exclusion",    "cac_threshold",
        "regime_exclusion", "chunk_length", "bin_width",        "k_mad",             "min_fraction",
        "baseline_window",  "spike_window", "recovery_horizon", "no_interest_threshold",
        "sampling_interval", "threads"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw InvalidConfig("config: unknown key '" + it.key() + "'");
        }
    }

    PipelineConfig config;
    read_field(j, "m", config.m);
    read_optional_size(j, "exclusion_radius", config.exclusion_radius);
    read_optional_size(j, "edge_exclusion", config.edge_exclusion);
    read_field(j, "cac_threshold", config.cac_threshold);
    read_optional_size(j, "regime_exclusion", config.regime_exclusion);
    read_optional_size(j, "chunk_length", config.chunk_length);
    read_field(j, "bin_width", config.bin_width);
    read_field(j, "k_mad", config.k_mad);
    read_field(j, "min_fraction", config.min_fraction);
    read_field(j, "baseline_window", config.baseline_window);
    read_field(j, "spike_window", config.spike_window);
    read_field(j, "recovery_horizon", config.recovery_horizon);
    read_field(j, "no_interest_threshold", config.no_interest_threshold);
    read_field(j, "sampling_interval", config.sampling_interval);
    read_field(j, "threads", config.threads);
    config.validate();
    return config;
}

std::uint64_t PipelineConfig::hash() const {
    return fnv1a(to_json().dump());
}

std::size_t EventReport::count_kind(EventKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(),
                      [kind](const EventOfInterest& e) { return e.kind == kind; }));
}

json event_to_json(const EventOfInterest& event) {
    json j;
    j["event_kind"] = to_string(event.kind);
    j["detection_bin"] = event.detection_bin;
    j["peak_bin"] = event.peak_bin;
    j["magnitude"] = event.magnitude;
    j["participants"] = json::array();
    for (const std::string& id : event.participants) {
        j["participants"].push_back(id);
    }
    j["paired_event"] = event.paired_event ? json(*event.paired_event) : json(nullptr);
    j["explanation"] = event.explanation;
    j["suggested_action"] = suggested_action(event.kind);
    return j;
}

json memory_to_json(const PatternMemory& memory) {
    json j;
    j["schema_version"] = 1;
    j["no_interest_threshold"] = memory.no_interest_threshold;
    j["signatures"] = json::array();
    for (const PatternSignature& sig : memory.signatures) {
        json s;
        s["participants"] = json::array();
        for (const std::string& id : sig.participants) {
            s["participants"].push_back(id);
        }
        s["magnitude_band"] = sig.magnitude_band;
        s["occurrences"] = sig.occurrences;
        s["last_seen"] = sig.last_seen;
        s["operator_objection"] = sig.operator_objection;
        j["signatures"].push_back(std::move(s));
    }
    return j;
}

PatternMemory memory_from_json(const json& j) {
    PatternMemory memory;
    memory.no_interest_threshold = j.value("no_interest_threshold", std::uint64_t{3});
    for (const json& s : j.value("signatures", json::array())) {
        PatternSignature sig;
        for (const json& id : s.value("participants", json::array())) {
            sig.participants.insert(id.get<std::string>());
        }
        sig.magnitude_band = s.value("magnitude_band", 0);
        sig.occurrences = s.value("occurrences", std::uint64_t{0});
        sig.last_seen = s.value("last_seen", std::int64_t{0});
        sig.operator_objection = s.value("operator_objection", false);
        memory.signatures.push_back(std::move(sig));
    }
    return memory;
}

void EventReport::write_jsonl(std::ostream& out) const {
    json meta;
    meta["t"] = "run_meta";
    meta["schema_version"] = schema_version;
    meta["config"] = config;
    meta["config_hash"] = hex64(config_hash);
    meta["input_digest"] = hex64(input_digest);
    meta["seed"] = seed;
    meta["series_count"] = series_count;
    meta["skipped_series"] = skipped_series;
    meta["total_points"] = total_points;
    meta["regime_changes"] = regime_change_count;
    meta["histogram_ref"] = histogram_ref;
    meta["graph_ref"] = graph_ref;
    meta["graph_nodes"] = graph_nodes;
    meta["graph_edges"] = graph_edges;
    meta["elapsed_ms"] = elapsed_ms;
    meta["run_unix_ms"] = run_unix_ms;
    out << meta.dump() << '\n';

    for (std::size_t i = 0; i < events.size(); ++i) {
        json line = event_to_json(events[i]);
        line["t"] = "event";
        line["index"] = i;
        out << line.dump() << '\n';
    }

    json summary;
    summary["t"] = "summary";
    summary["events"] = events.size();
    summary["interest"] = count_kind(EventKind::interest);
    summary["no_interest"] = count_kind(EventKind::no_interest);
    summary["recovery"] = count_kind(EventKind::recovery);
    out << summary.dump() << '\n';
}

void EventReport::write_histogram_tsv(std::ostream& out) const {
    out << "bin\tcount\n";
    for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
        out << b << '\t' << histogram.counts[b] << '\n';
    }
}

EventReport run_pipeline(const PipelineConfig& config, const std::vector<Series>& fleet,
                         PatternMemory& memory, KnowledgeGraph& graph,
                         std::vector<RegimeChange>* changes_out) {
    config.validate();
    if (fleet.empty()) {
        throw EmptyInput("run_pipeline: fleet is empty");
    }
    const auto started = std::chrono::steady_clock::now();

    const FleetTimeline timeline = common_timeline(fleet);
    memory.no_interest_threshold = config.no_interest_threshold;

    // A series needs 2m samples and a full exclusion zone on each side of
    // some position before a profile is defined; shorter ones (e.g. split
    // fragments) are skipped and counted.
    const SegmentationParams seg = config.segmentation();
    const std::size_t min_samples =
        std::max(2 * seg.m, seg.m + 2 * seg.effective_exclusion_radius() + 1);

    std::vector<std::size_t> runnable;
    std::uint64_t total_points = 0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        total_points += fleet[i].size();
        if (fleet[i].size() >= min_samples) {
            runnable.push_back(i);
        }
    }

    std::vector<std::vector<RegimeChange>> per_series(runnable.size());
    const unsigned threads = resolve_threads(config.threads);
    parallel_for(runnable.size(), threads, [&](std::size_t k) {
        per_series[k] = segment_series(fleet[runnable[k]], seg);
    });

    std::vector<RegimeChange> changes;
    for (const auto& chunk : per_series) {
        changes.insert(changes.end(), chunk.begin(), chunk.end());
    }

    // Symbolic registration: one region per series slice.
    for (const Series& s : fleet) {
        PayloadRef payload;
        payload.kind = PayloadRef::Kind::series_slice;
        payload.key = s.series_id;
        payload.begin = s.start_timestamp;
        payload.end = s.start_timestamp + static_cast<std::int64_t>(s.size());
        graph.register_region(payload, s.series_id);
    }

    const RegimeHistogram hist = build_histogram(changes, config.bin_width, timeline);

    std::set<std::string> distinct_ids;
    for (const Series& s : fleet) {
        distinct_ids.insert(s.series_id);
    }
    std::vector<EventOfInterest> events =
        detect_spikes(hist, config.spikes(), distinct_ids.size());
    pair_recovery(events, config.recovery_horizon);
    for (EventOfInterest& event : events) {
        if (event.kind == EventKind::candidate) {
            classify_event(event, memory);
        }
    }

    // One bottom-up pass folds the regime evidence and the classified events
    // into the graph.
    graph.refresh_bottom_up(changes, events);

    EventReport report;
    report.config = config.to_json();
    report.config_hash = config.hash();
    report.input_digest = fleet_digest(fleet);
    report.series_count = fleet.size();
    report.skipped_series = fleet.size() - runnable.size();
    report.total_points = total_points;
    report.regime_change_count = changes.size();
    report.events = std::move(events);
    report.histogram = hist;
    report.graph_nodes = graph.node_count();
    report.graph_edges = graph.edge_count();
    report.run_unix_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
    report.elapsed_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();

    if (changes_out != nullptr) {
        *changes_out = std::move(changes);
    }
    return report;
}

EventReport run_pipeline(const PipelineConfig& config, const std::vector<Series>& fleet) {
    PatternMemory memory;
    KnowledgeGraph graph;
    return run_pipeline(config, fleet, memory, graph);
}

}  // namespace sentinel
