#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sentinel/series.hpp"

namespace sentinel {

/// Per-position count of nearest-neighbor arcs strictly spanning the
/// position: raw_crossings[k] = |{i : min(i, index[i]) < k < max(i, index[i])}|.
struct ArcCurve {
    std::vector<std::uint32_t> raw_crossings;

    std::size_t size() const { return raw_crossings.size(); }
};

/// Arc curve normalized by the expected crossings under uniformly random
/// arcs. Values live in [0, 1]; positions within edge_exclusion of either
/// end are pinned to 1 and never selectable as boundaries.
struct CorrectedArcCurve {
    std::vector<double> values;
    std::size_t edge_exclusion = 0;

    std::size_t size() const { return values.size(); }
};

/// A behavioral-change point of one series. salience = 1 - CAC value, so
/// deeper dips score higher.
struct RegimeChange {
    std::string series_id;
    std::size_t position = 0;   // sample index into the series
    std::int64_t timestamp = 0; // epoch index on the fleet timeline
    double salience = 0.0;
};

/// Expected crossings at position i of an L-point curve under random arcs.
double ideal_crossings(std::size_t i, std::size_t length);

/// O(n) arc counting via difference-array accumulation.
ArcCurve arc_curve(const MatrixProfile& profile);

/// values[i] = min(1, raw_crossings[i] / ideal(i)); the edge_exclusion
/// positions at each end are pinned to 1.
CorrectedArcCurve corrected_arc_curve(const ArcCurve& arcs, std::size_t edge_exclusion);

/// Greedy lowest-first extraction: repeatedly take the lowest CAC value below
/// threshold, emit it, and mask positions strictly within regime_exclusion of
/// it. The result is sorted by position.
std::vector<RegimeChange> extract_regimes(const CorrectedArcCurve& cac, double threshold,
                                          std::size_t regime_exclusion, const Series& series);

/// Tunables for one series' segmentation. Unset optionals derive from m:
/// exclusion_radius = ceil(m/2), edge_exclusion = m, regime_exclusion = 2m,
/// chunk_length = 4m + 20. Boundary localization error is O(m), so m must
/// stay at or below the detection-latency budget in samples.
struct SegmentationParams {
    std::size_t m = 10;
    std::optional<std::size_t> exclusion_radius;
    std::optional<std::size_t> edge_exclusion;
    double cac_threshold = 0.45;
    std::optional<std::size_t> regime_exclusion;
    std::optional<std::size_t> chunk_length;

    std::size_t effective_exclusion_radius() const {
        return exclusion_radius ? *exclusion_radius : default_exclusion_radius(m);
    }
    std::size_t effective_edge_exclusion() const {
        return edge_exclusion ? *edge_exclusion : m;
    }
    std::size_t effective_regime_exclusion() const {
        return regime_exclusion ? *regime_exclusion : 2 * m;
    }
    std::size_t effective_chunk_length() const {
        return chunk_length ? *chunk_length : 4 * m + 20;
    }
};

/// Full single-series pass. Long series are segmented in overlapping chunks
/// (each chunk gets its own profile -> arc curve -> CAC -> extraction) so a
/// temporary excursion is seen one boundary at a time; with both flanks of an
/// excursion in view at once, nearest-neighbor arcs skip across it and the
/// boundary dips wash out. Chunk results are deduplicated by salience under
/// the regime_exclusion separation rule.
std::vector<RegimeChange> segment_series(const Series& series, const SegmentationParams& params);

}  // namespace sentinel
