#include "sentinel/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sentinel/errors.hpp"

namespace sentinel {

double ideal_crossings(std::size_t i, std::size_t length) {
    const double x = static_cast<double>(i);
    const double l = static_cast<double>(length);
    return 2.0 * x * (l - x) / l;
}

ArcCurve arc_curve(const MatrixProfile& profile) {
    const std::size_t len = profile.size();
    if (profile.indices.size() != len) {
        throw InvalidWindow("arc_curve: profile distances/indices length mismatch");
    }

    // Difference array: an arc (a, b) adds one crossing to every position
    // strictly between its endpoints.
    std::vector<std::int64_t> diff(len + 1, 0);
    for (std::size_t i = 0; i < len; ++i) {
        const std::size_t j = profile.indices[i];
        if (j >= len) {
            throw IndexOutOfRange("arc_curve: profile index out of range at position " +
                                  std::to_string(i));
        }
        const std::size_t lo = std::min(i, j);
        const std::size_t hi = std::max(i, j);
        if (hi > lo + 1) {
            diff[lo + 1] += 1;
            diff[hi] -= 1;
        }
    }

    ArcCurve arcs;
    arcs.raw_crossings.resize(len);
    std::int64_t running = 0;
    for (std::size_t k = 0; k < len; ++k) {
        running += diff[k];
        arcs.raw_crossings[k] = static_cast<std::uint32_t>(running);
    }
    return arcs;
}

CorrectedArcCurve corrected_arc_curve(const ArcCurve& arcs, std::size_t edge_exclusion) {
    const std::size_t len = arcs.size();
    if (len < 3) {
        throw InvalidWindow("corrected_arc_curve: arc curve needs at least 3 positions");
    }

    CorrectedArcCurve cac;
    cac.edge_exclusion = edge_exclusion;
    cac.values.assign(len, 1.0);
    const std::size_t lo = std::min(edge_exclusion, len);
    const std::size_t hi = len > edge_exclusion ? len - edge_exclusion : 0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double ideal = ideal_crossings(i, len);
        if (ideal <= 0.0) {
            continue;  // stays pinned at 1
        }
        cac.values[i] = std::min(1.0, static_cast<double>(arcs.raw_crossings[i]) / ideal);
    }
    return cac;
}

std::vector<RegimeChange> extract_regimes(const CorrectedArcCurve& cac, double threshold,
                                          std::size_t regime_exclusion, const Series& series) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw InvalidConfig("extract_regimes: threshold must be in (0, 1), got " +
                            std::to_string(threshold));
    }
    if (regime_exclusion < 1) {
        throw InvalidConfig("extract_regimes: regime_exclusion must be >= 1");
    }

    const std::size_t len = cac.size();
    std::vector<bool> masked(len, false);
    std::vector<RegimeChange> out;

    for (;;) {
        double best = threshold;
        std::size_t best_pos = len;
        for (std::size_t i = 0; i < len; ++i) {
            if (!masked[i] && cac.values[i] < best) {
                best = cac.values[i];
                best_pos = i;
            }
        }
        if (best_pos == len) {
            break;
        }
        RegimeChange change;
        change.series_id = series.series_id;
        change.position = best_pos;
        change.timestamp = series.timestamp_at(best_pos);
        change.salience = 1.0 - cac.values[best_pos];
        out.push_back(std::move(change));

        // Mask strictly within the exclusion span; a change exactly
        // regime_exclusion away stays admissible.
        const std::size_t from = best_pos > regime_exclusion ? best_pos - regime_exclusion + 1 : 0;
        const std::size_t to = std::min(len, best_pos + regime_exclusion);
        for (std::size_t i = from; i < to; ++i) {
            masked[i] = true;
        }
    }

    std::sort(out.begin(), out.end(),
              [](const RegimeChange& a, const RegimeChange& b) { return a.position < b.position; });
    return out;
}

namespace {

std::vector<RegimeChange> segment_once(const Series& series, const SegmentationParams& params) {
    const MatrixProfile profile =
        matrix_profile(series, params.m, params.effective_exclusion_radius());
    const ArcCurve arcs = arc_curve(profile);
    const CorrectedArcCurve cac = corrected_arc_curve(arcs, params.effective_edge_exclusion());
    return extract_regimes(cac, params.cac_threshold, params.effective_regime_exclusion(), series);
}

}  // namespace

std::vector<RegimeChange> segment_series(const Series& series, const SegmentationParams& params) {
    const std::size_t n = series.size();
    const std::size_t chunk = params.effective_chunk_length();
    if (n <= chunk) {
        return segment_once(series, params);
    }

    const std::size_t edge = params.effective_edge_exclusion();
    const std::size_t profile_len = chunk - params.m + 1;
    if (profile_len <= 2 * edge) {
        throw InvalidConfig("segment_series: chunk_length leaves no selectable positions");
    }
    // Half the selectable interior width: every position is interior to two
    // chunks with different flank alignments, so a boundary close to one
    // chunk's selectable edge is still well-centered in the other.
    const std::size_t stride = std::max<std::size_t>(1, (profile_len - 2 * edge) / 2);

    std::vector<std::size_t> starts;
    for (std::size_t c = 0;; c += stride) {
        if (c + chunk >= n) {
            starts.push_back(n - chunk);
            break;
        }
        starts.push_back(c);
    }

    std::vector<RegimeChange> candidates;
    for (std::size_t c : starts) {
        Series piece;
        piece.series_id = series.series_id;
        piece.sampling_interval = series.sampling_interval;
        piece.start_timestamp = series.start_timestamp + static_cast<std::int64_t>(c);
        piece.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(c),
                            series.values.begin() + static_cast<std::ptrdiff_t>(c + chunk));
        std::vector<RegimeChange> found = segment_once(piece, params);
        for (RegimeChange& change : found) {
            change.position += c;
            candidates.push_back(std::move(change));
        }
    }

    // Chunks overlap, so the same boundary may surface twice; keep the most
    // salient point of each neighborhood.
    std::sort(candidates.begin(), candidates.end(), [](const RegimeChange& a, const RegimeChange& b) {
        return a.salience != b.salience ? a.salience > b.salience : a.position < b.position;
    });
    const std::size_t separation = params.effective_regime_exclusion();
    std::vector<RegimeChange> kept;
    for (RegimeChange& candidate : candidates) {
        bool close = false;
        for (const RegimeChange& existing : kept) {
            const std::size_t gap = existing.position > candidate.position
                                        ? existing.position - candidate.position
                                        : candidate.position - existing.position;
            if (gap < separation) {
                close = true;
                break;
            }
        }
        if (!close) {
            kept.push_back(std::move(candidate));
        }
    }
    std::sort(kept.begin(), kept.end(),
              [](const RegimeChange& a, const RegimeChange& b) { return a.position < b.position; });
    return kept;
}

}  // namespace sentinel
