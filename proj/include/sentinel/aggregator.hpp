#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sentinel/segmentation.hpp"

namespace sentinel {

/// Sampling alignment shared by every series of a fleet.
struct FleetTimeline {
    double sampling_interval = 6.0;
    std::int64_t length = 0;  // one past the last timestamp
};

/// Validates that all series agree on the sampling interval within 1% and
/// returns the common timeline. Throws MixedTimelines otherwise.
FleetTimeline common_timeline(const std::vector<Series>& fleet);

/// Fleet-wide histogram of regime changes. Each series contributes at most
/// once per bin (counts[b] == |contributors[b]|).
struct RegimeHistogram {
    std::int64_t bin_width = 1;  // timestamps per bin
    std::vector<std::uint32_t> counts;
    std::vector<std::vector<std::string>> contributors;  // sorted, unique per bin

    std::size_t bins() const { return counts.size(); }
    std::uint64_t total() const;
};

RegimeHistogram build_histogram(const std::vector<RegimeChange>& changes,
                                std::int64_t bin_width, const FleetTimeline& timeline);

enum class EventKind { candidate, interest, no_interest, recovery };

const char* to_string(EventKind kind);

/// A fleet-level spike in the regime-change histogram.
struct EventOfInterest {
    std::int64_t peak_bin = 0;
    std::int64_t detection_bin = 0;  // first bin at which the spike rule fired
    std::uint32_t magnitude = 0;     // simultaneity count at the peak
    std::set<std::string> participants;
    EventKind kind = EventKind::candidate;
    std::optional<std::size_t> paired_event;  // index into the event list
    std::string explanation;
};

/// Spike rule tunables (see PipelineConfig for the operational defaults).
/// spike_window widens the firing statistic to the deduplicated number of
/// series that changed within the trailing spike_window bins; 1 reduces it
/// to the plain per-bin count.
struct SpikeParams {
    std::size_t baseline_window = 100;
    double k_mad = 5.0;
    double min_fraction = 0.2;
    std::size_t spike_window = 10;
};

/// A bin fires when the windowed deduplicated count exceeds
/// max(median + k_mad * MAD over the trailing baseline_window values,
///     min_fraction * fleet_size).
/// Consecutive firing bins merge into one event.
std::vector<EventOfInterest> detect_spikes(const RegimeHistogram& hist, const SpikeParams& params,
                                           std::size_t fleet_size);

/// Relabels spikes that echo an earlier open event (participant Jaccard
/// >= 0.5 within the horizon) as recoveries and links both directions.
void pair_recovery(std::vector<EventOfInterest>& events, std::int64_t prior_event_horizon);

/// One remembered fleet-wide pattern: which series moved and how large the
/// spike was. operator_objection pins a signature to interest permanently.
struct PatternSignature {
    std::set<std::string> participants;
    int magnitude_band = 0;
    std::uint64_t occurrences = 0;
    std::int64_t last_seen = 0;
    bool operator_objection = false;
};

struct PatternMemory {
    std::vector<PatternSignature> signatures;
    std::uint64_t no_interest_threshold = 3;

    void reset() { signatures.clear(); }
};

/// Jaccard similarity of two participant sets (1 for two empty sets).
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Magnitude band used for signature matching: floor(log2(magnitude)).
int magnitude_band(std::uint32_t magnitude);

/// Matches the event against memory (Jaccard >= 0.7, same magnitude band).
/// A signature already sighted more than no_interest_threshold times makes
/// the event no_interest; everything else is interest. The memory occurrence
/// count is incremented either way.
void classify_event(EventOfInterest& event, PatternMemory& memory);

}  // namespace sentinel
