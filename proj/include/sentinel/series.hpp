#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sentinel {

/// One device metric: uniformly sampled values on the shared fleet timeline.
/// `start_timestamp` is the epoch index of values[0]; sample k lives at
/// timestamp start_timestamp + k.
struct Series {
    std::string series_id;
    double sampling_interval = 6.0;  // seconds between samples
    std::int64_t start_timestamp = 0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    std::int64_t timestamp_at(std::size_t position) const {
        return start_timestamp + static_cast<std::int64_t>(position);
    }
};

/// Per-window mean and population standard deviation for all length-m
/// subsequences of one series. Length of both vectors is n - m + 1.
struct SlidingStats {
    std::size_t window = 0;
    std::vector<double> means;
    std::vector<double> stds;
};

/// For each length-m subsequence: the z-normalized Euclidean distance to its
/// nearest neighbor outside the exclusion zone, and that neighbor's start
/// position.
struct MatrixProfile {
    std::size_t window = 0;
    std::size_t exclusion_radius = 0;
    std::vector<double> distances;
    std::vector<std::size_t> indices;

    std::size_t size() const { return distances.size(); }
};

/// Windows with std below this are treated as flat (zero-variance): two flat
/// windows are at distance 0, a flat and a non-flat window at sqrt(2m).
inline constexpr double kFlatStdThreshold = 1e-12;

/// Default exclusion zone half-width: ceil(m / 2).
std::size_t default_exclusion_radius(std::size_t m);

/// O(n) sliding mean/std via compensated running sums. The series is shifted
/// by its global mean before accumulation so the variance subtraction stays
/// well conditioned (error below 1e-9 relative against direct recomputation).
SlidingStats sliding_stats(const Series& series, std::size_t m);

/// Distances from the window starting at query_start to every window of the
/// same series: entry j = sqrt(2m * (1 - corr(query, j))) with the Pearson
/// correlation clamped to [-1, 1]. No exclusion zone is applied.
std::vector<double> distance_profile(const Series& series, std::size_t query_start,
                                     std::size_t m, const SlidingStats& stats);

/// Matrix profile via a streaming dot-product recurrence over diagonals,
/// O(1) per cell with a periodic exact recomputation to bound float drift.
/// Exact nearest-neighbor ties resolve to the farthest index, then lowest.
MatrixProfile matrix_profile(const Series& series, std::size_t m);
MatrixProfile matrix_profile(const Series& series, std::size_t m, std::size_t exclusion_radius);

/// Reference implementation: direct O(n^2 * m) evaluation with explicit
/// per-window z-normalization. Same contract as matrix_profile; intended for
/// n <= 4096.
MatrixProfile matrix_profile_bruteforce(const Series& series, std::size_t m);
MatrixProfile matrix_profile_bruteforce(const Series& series, std::size_t m,
                                        std::size_t exclusion_radius);

}  // namespace sentinel
