#pragma once

// Test-only helpers: seeded data generators and independent oracles. The
// oracles here recompute results by the most direct route available and must
// stay independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "sentinel/series.hpp"

namespace testsupport {

// Deterministic normal deviates that do not depend on libstdc++'s
// distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : rng_(seed) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {  // inclusive
        return lo + rng_() % (hi - lo + 1);
    }

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline sentinel::Series random_series(std::uint64_t seed, std::size_t n) {
    sentinel::Series s;
    s.series_id = "test-" + std::to_string(seed);
    s.values.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        s.values[i] = rng.normal();
    }
    return s;
}

// Direct two-pass mean/std of one window.
inline void window_stats_twopass(const std::vector<double>& v, std::size_t start, std::size_t m,
                                 double& mean, double& std_out) {
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        sum += v[start + k];
    }
    mean = sum / static_cast<double>(m);
    double sq = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double d = v[start + k] - mean;
        sq += d * d;
    }
    std_out = std::sqrt(sq / static_cast<double>(m));
}

// Explicit z-normalize-then-Euclidean distance with the flat-window
// conventions.
inline double znorm_distance(const std::vector<double>& v, std::size_t i, std::size_t j,
                             std::size_t m) {
    double mi, si, mj, sj;
    window_stats_twopass(v, i, m, mi, si);
    window_stats_twopass(v, j, m, mj, sj);
    const bool flat_i = si < 1e-12;
    const bool flat_j = sj < 1e-12;
    if (flat_i && flat_j) {
        return 0.0;
    }
    if (flat_i || flat_j) {
        return std::sqrt(2.0 * static_cast<double>(m));
    }
    double sq = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double d = (v[i + k] - mi) / si - (v[j + k] - mj) / sj;
        sq += d * d;
    }
    return std::sqrt(sq);
}

struct NearestOracle {
    double best = std::numeric_limits<double>::infinity();
    double runner_up = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
};

// Full nearest-neighbor scan with runner-up tracking, for index-agreement
// checks wherever the gap to the runner-up is decisive.
inline std::vector<NearestOracle> nearest_oracle(const std::vector<double>& v, std::size_t m,
                                                 std::size_t exclusion) {
    const std::size_t len = v.size() - m + 1;
    std::vector<NearestOracle> out(len);
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            const std::size_t gap = i > j ? i - j : j - i;
            if (gap <= exclusion) {
                continue;
            }
            const double d = znorm_distance(v, i, j, m);
            if (d < out[i].best) {
                out[i].runner_up = out[i].best;
                out[i].best = d;
                out[i].index = j;
            } else if (d < out[i].runner_up) {
                out[i].runner_up = d;
            }
        }
    }
    return out;
}

// O(L^2) arc-crossing count straight from the definition.
inline std::vector<std::uint32_t> arc_crossings_direct(const std::vector<std::size_t>& indices) {
    const std::size_t len = indices.size();
    std::vector<std::uint32_t> crossings(len, 0);
    for (std::size_t k = 0; k < len; ++k) {
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t lo = std::min(i, indices[i]);
            const std::size_t hi = std::max(i, indices[i]);
            if (lo < k && k < hi) {
                ++crossings[k];
            }
        }
    }
    return crossings;
}

// Two-regime synthetic: sine of period_a then period_b, equal halves.
inline sentinel::Series two_regime_series(std::uint64_t seed, std::size_t half,
                                          double period_a, double period_b,
                                          double noise = 0.05) {
    sentinel::Series s;
    s.series_id = "two-regime-" + std::to_string(seed);
    s.values.resize(2 * half);
    Rng rng(seed);
    for (std::size_t t = 0; t < 2 * half; ++t) {
        const double period = t < half ? period_a : period_b;
        s.values[t] =
            std::sin(2.0 * M_PI * static_cast<double>(t) / period) + noise * rng.normal();
    }
    return s;
}

}  // namespace testsupport
