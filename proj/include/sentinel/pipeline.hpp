#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/aggregator.hpp"
#include "sentinel/metamodel.hpp"
#include "sentinel/segmentation.hpp"
#include "sentinel/series.hpp"

namespace sentinel {

/// Every pipeline tunable in one place. Unset optionals derive from m at run
/// time: exclusion_radius = ceil(m/2), edge_exclusion = m,
/// regime_exclusion = 2m.
struct PipelineConfig {
    std::size_t m = 10;
    std::optional<std::size_t> exclusion_radius;
    std::optional<std::size_t> edge_exclusion;
    double cac_threshold = 0.45;
    std::optional<std::size_t> regime_exclusion;
    std::optional<std::size_t> chunk_length;

    std::int64_t bin_width = 1;
    double k_mad = 5.0;
    double min_fraction = 0.2;
    std::size_t baseline_window = 100;
    std::size_t spike_window = 10;
    std::int64_t recovery_horizon = 200;
    std::uint64_t no_interest_threshold = 3;

    double sampling_interval = 6.0;
    unsigned threads = 0;  // 0 = hardware concurrency; capped by REGIME_SENTINEL_THREADS

    /// Throws InvalidConfig naming the first out-of-range field.
    void validate() const;

    SegmentationParams segmentation() const;
    SpikeParams spikes() const;

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);

    /// FNV-1a over the canonical JSON rendering; stable across runs and
    /// platforms.
    std::uint64_t hash() const;
};

/// Self-contained audit record of one pipeline run.
struct EventReport {
    int schema_version = 1;
    nlohmann::json config;
    std::uint64_t config_hash = 0;
    std::uint64_t input_digest = 0;
    std::uint64_t seed = 0;

    std::size_t series_count = 0;
    std::size_t skipped_series = 0;  // too short to segment at this m
    std::uint64_t total_points = 0;
    std::size_t regime_change_count = 0;

    std::vector<EventOfInterest> events;
    RegimeHistogram histogram;
    std::size_t graph_nodes = 0;
    std::size_t graph_edges = 0;
    std::string histogram_ref;  // where the TSV was written, when it was
    std::string graph_ref;      // where the graph export was written

    double elapsed_ms = 0.0;
    std::int64_t run_unix_ms = 0;

    std::size_t count_kind(EventKind kind) const;

    /// Line-oriented JSON: run_meta, one line per event, then a summary.
    void write_jsonl(std::ostream& out) const;

    /// bin <TAB> count, one line per bin.
    void write_histogram_tsv(std::ostream& out) const;
};

nlohmann::json event_to_json(const EventOfInterest& event);
nlohmann::json memory_to_json(const PatternMemory& memory);
PatternMemory memory_from_json(const nlohmann::json& j);

/// Full run: per-series segmentation (parallel) -> fleet histogram -> spike
/// detection -> recovery pairing -> classification -> symbolization into the
/// knowledge graph. Deterministic for fixed inputs and config.
EventReport run_pipeline(const PipelineConfig& config, const std::vector<Series>& fleet,
                         PatternMemory& memory, KnowledgeGraph& graph,
                         std::vector<RegimeChange>* changes_out = nullptr);
EventReport run_pipeline(const PipelineConfig& config, const std::vector<Series>& fleet);

}  // namespace sentinel
