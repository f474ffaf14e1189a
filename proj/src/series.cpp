#include "sentinel/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sentinel/errors.hpp"

namespace sentinel {

namespace {

// Exact dot products are re-seeded along each diagonal after this many
// incremental updates to keep accumulated float drift bounded.
constexpr std::size_t kDotRefreshInterval = 4096;

void neumaier_add(double& sum, double& comp, double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
        comp += (sum - t) + v;
    } else {
        comp += (v - t) + sum;
    }
    sum = t;
}

double compensated_mean(const std::vector<double>& values) {
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        neumaier_add(sum, comp, v);
    }
    return (sum + comp) / static_cast<double>(values.size());
}

double window_dot(const double* x, std::size_t i, std::size_t j, std::size_t m) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        acc += x[i + k] * x[j + k];
    }
    return acc;
}

// z-normalized Euclidean distance between windows i and j from their raw dot
// product, with the flat-window conventions applied.
double z_distance(double dot, const SlidingStats& stats, std::size_t i, std::size_t j,
                  std::size_t m) {
    const bool flat_i = stats.stds[i] < kFlatStdThreshold;
    const bool flat_j = stats.stds[j] < kFlatStdThreshold;
    const double md = static_cast<double>(m);
    if (flat_i && flat_j) {
        return 0.0;
    }
    if (flat_i || flat_j) {
        return std::sqrt(2.0 * md);
    }
    double corr = (dot - md * stats.means[i] * stats.means[j]) /
                  (md * stats.stds[i] * stats.stds[j]);
    corr = std::clamp(corr, -1.0, 1.0);
    return std::sqrt(2.0 * md * (1.0 - corr));
}

struct ProfileAccumulator {
    std::vector<double> best;
    std::vector<std::size_t> index;

    explicit ProfileAccumulator(std::size_t len)
        : best(len, std::numeric_limits<double>::infinity()), index(len, len) {}

    // Exact distance ties resolve to the farthest candidate (then lowest
    // index). Ties only arise in practice between identical flat windows;
    // preferring the near or the low end would funnel every arc of a
    // constant segment toward one spot and puncture the arc curve at a fixed
    // offset inside the segment, deeper than the dip at the segment's real
    // boundary. Far ties spread those arcs across the segment instead.
    void offer(std::size_t position, std::size_t candidate, double dist) {
        if (dist < best[position]) {
            best[position] = dist;
            index[position] = candidate;
            return;
        }
        if (dist == best[position] && index[position] < best.size()) {
            const std::size_t held = index[position] > position ? index[position] - position
                                                                : position - index[position];
            const std::size_t offered =
                candidate > position ? candidate - position : position - candidate;
            if (offered > held || (offered == held && candidate < index[position])) {
                index[position] = candidate;
            }
        }
    }
};

void check_profile_preconditions(const Series& series, std::size_t m,
                                 std::size_t exclusion_radius) {
    const std::size_t n = series.values.size();
    if (m < 2) {
        throw InvalidWindow("matrix profile: window must be >= 2, got " + std::to_string(m));
    }
    if (n < 2 * m) {
        throw SeriesTooShort("matrix profile: series '" + series.series_id + "' has " +
                             std::to_string(n) + " samples, need at least " +
                             std::to_string(2 * m));
    }
    // Every position must have at least one admissible neighbor, otherwise
    // the profile is undefined there.
    const std::size_t profile_len = n - m + 1;
    if (profile_len < 2 * exclusion_radius + 2) {
        throw SeriesTooShort("matrix profile: series '" + series.series_id +
                             "' too short for exclusion radius " +
                             std::to_string(exclusion_radius) + " (profile length " +
                             std::to_string(profile_len) + ")");
    }
}

}  // namespace

std::size_t default_exclusion_radius(std::size_t m) {
    return (m + 1) / 2;
}

SlidingStats sliding_stats(const Series& series, std::size_t m) {
    const std::size_t n = series.values.size();
    if (m < 2) {
        throw InvalidWindow("sliding_stats: window must be >= 2, got " + std::to_string(m));
    }
    if (n < m) {
        throw SeriesTooShort("sliding_stats: series '" + series.series_id + "' has " +
                             std::to_string(n) + " samples, need at least " +
                             std::to_string(m));
    }

    const double shift = compensated_mean(series.values);
    std::vector<double> prefix(n + 1, 0.0);
    std::vector<double> prefix_sq(n + 1, 0.0);
    double s1 = 0.0, c1 = 0.0, s2 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = series.values[i] - shift;
        neumaier_add(s1, c1, y);
        neumaier_add(s2, c2, y * y);
        prefix[i + 1] = s1 + c1;
        prefix_sq[i + 1] = s2 + c2;
    }

    // Length of the run of identical values ending at each sample. An
    // exactly-constant window has population std 0 by definition; computing
    // it through the prefix sums would leave a cancellation residual above
    // the flat-window threshold.
    std::vector<std::size_t> run(n, 1);
    for (std::size_t i = 1; i < n; ++i) {
        run[i] = series.values[i] == series.values[i - 1] ? run[i - 1] + 1 : 1;
    }

    const std::size_t len = n - m + 1;
    const double md = static_cast<double>(m);
    SlidingStats out;
    out.window = m;
    out.means.resize(len);
    out.stds.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        if (run[i + m - 1] >= m) {
            out.means[i] = series.values[i];
            out.stds[i] = 0.0;
            continue;
        }
        const double mean_shifted = (prefix[i + m] - prefix[i]) / md;
        out.means[i] = mean_shifted + shift;
        const double var =
            (prefix_sq[i + m] - prefix_sq[i]) / md - mean_shifted * mean_shifted;
        out.stds[i] = std::sqrt(std::max(0.0, var));
    }
    return out;
}

std::vector<double> distance_profile(const Series& series, std::size_t query_start,
                                     std::size_t m, const SlidingStats& stats) {
    const std::size_t n = series.values.size();
    if (m < 2) {
        throw InvalidWindow("distance_profile: window must be >= 2");
    }
    if (n < m) {
        throw SeriesTooShort("distance_profile: series shorter than window");
    }
    if (query_start > n - m) {
        throw IndexOutOfRange("distance_profile: query_start " +
                              std::to_string(query_start) + " exceeds " +
                              std::to_string(n - m));
    }
    const std::size_t len = n - m + 1;
    if (stats.window != m || stats.means.size() != len) {
        throw InvalidWindow("distance_profile: stats were computed for a different window");
    }

    const double* x = series.values.data();
    std::vector<double> out(len);
    for (std::size_t j = 0; j < len; ++j) {
        const double dot = window_dot(x, query_start, j, m);
        out[j] = z_distance(dot, stats, query_start, j, m);
    }
    return out;
}

MatrixProfile matrix_profile(const Series& series, std::size_t m) {
    return matrix_profile(series, m, default_exclusion_radius(m));
}

MatrixProfile matrix_profile(const Series& series, std::size_t m,
                             std::size_t exclusion_radius) {
    check_profile_preconditions(series, m, exclusion_radius);
    const std::size_t n = series.values.size();
    const std::size_t len = n - m + 1;
    const SlidingStats stats = sliding_stats(series, m);
    const double* x = series.values.data();

    ProfileAccumulator acc(len);
    for (std::size_t d = exclusion_radius + 1; d < len; ++d) {
        double dot = window_dot(x, 0, d, m);
        std::size_t steps_since_refresh = 0;
        for (std::size_t i = 0; i + d < len; ++i) {
            const std::size_t j = i + d;
            if (i > 0) {
                dot += x[i + m - 1] * x[j + m - 1] - x[i - 1] * x[j - 1];
                if (++steps_since_refresh == kDotRefreshInterval) {
                    dot = window_dot(x, i, j, m);
                    steps_since_refresh = 0;
                }
            }
            const double dist = z_distance(dot, stats, i, j, m);
            acc.offer(i, j, dist);
            acc.offer(j, i, dist);
        }
    }

    MatrixProfile profile;
    profile.window = m;
    profile.exclusion_radius = exclusion_radius;
    profile.distances = std::move(acc.best);
    profile.indices = std::move(acc.index);
    return profile;
}

MatrixProfile matrix_profile_bruteforce(const Series& series, std::size_t m) {
    return matrix_profile_bruteforce(series, m, default_exclusion_radius(m));
}

MatrixProfile matrix_profile_bruteforce(const Series& series, std::size_t m,
                                        std::size_t exclusion_radius) {
    check_profile_preconditions(series, m, exclusion_radius);
    const std::size_t n = series.values.size();
    const std::size_t len = n - m + 1;
    const SlidingStats stats = sliding_stats(series, m);
    const double bound = 2.0 * std::sqrt(static_cast<double>(m));

    // Explicit z-normalization of every window.
    std::vector<double> znorm(len * m, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
        if (stats.stds[i] < kFlatStdThreshold) {
            continue;  // flat windows stay all-zero, distances use the conventions below
        }
        for (std::size_t k = 0; k < m; ++k) {
            znorm[i * m + k] = (series.values[i + k] - stats.means[i]) / stats.stds[i];
        }
    }

    ProfileAccumulator acc(len);
    for (std::size_t i = 0; i < len; ++i) {
        const bool flat_i = stats.stds[i] < kFlatStdThreshold;
        for (std::size_t j = i + exclusion_radius + 1; j < len; ++j) {
            const bool flat_j = stats.stds[j] < kFlatStdThreshold;
            double dist;
            if (flat_i && flat_j) {
                dist = 0.0;
            } else if (flat_i || flat_j) {
                dist = std::sqrt(2.0 * static_cast<double>(m));
            } else {
                double sq = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    const double delta = znorm[i * m + k] - znorm[j * m + k];
                    sq += delta * delta;
                }
                dist = std::min(std::sqrt(sq), bound);
            }
            acc.offer(i, j, dist);
            acc.offer(j, i, dist);
        }
    }

    MatrixProfile profile;
    profile.window = m;
    profile.exclusion_radius = exclusion_radius;
    profile.distances = std::move(acc.best);
    profile.indices = std::move(acc.index);
    return profile;
}

}  // namespace sentinel
