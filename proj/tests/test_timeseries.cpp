#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sentinel/errors.hpp"
#include "sentinel/series.hpp"
#include "test_support.hpp"

using namespace sentinel;
using namespace testsupport;

namespace {

Series from_values(std::vector<double> values) {
    Series s;
    s.series_id = "s";
    s.values = std::move(values);
    return s;
}

}  // namespace

TEST_CASE("sliding_stats constant and ramp windows") {
    const SlidingStats flat = sliding_stats(from_values({1, 1, 1, 1}), 2);
    REQUIRE(flat.means.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(flat.means[i] == doctest::Approx(1.0));
        CHECK(flat.stds[i] == doctest::Approx(0.0));
    }

    const SlidingStats ramp = sliding_stats(from_values({0, 1, 2, 3}), 2);
    CHECK(ramp.means[0] == doctest::Approx(0.5));
    CHECK(ramp.means[1] == doctest::Approx(1.5));
    CHECK(ramp.means[2] == doctest::Approx(2.5));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(ramp.stds[i] == doctest::Approx(0.5));
    }
}

TEST_CASE("sliding_stats matches the two-pass oracle within 1e-9 relative") {
    const Series s = random_series(42, 128);
    const SlidingStats stats = sliding_stats(s, 8);
    REQUIRE(stats.means.size() == 121);
    for (std::size_t i = 0; i < stats.means.size(); ++i) {
        double mean, sd;
        window_stats_twopass(s.values, i, 8, mean, sd);
        CHECK(std::abs(stats.means[i] - mean) <= 1e-9 * std::max(1.0, std::abs(mean)));
        CHECK(std::abs(stats.stds[i] - sd) <= 1e-9 * std::max(1.0, sd));
    }
}

TEST_CASE("sliding_stats rejects degenerate inputs") {
    CHECK_THROWS_AS(sliding_stats(from_values({1, 2}), 1), InvalidWindow);
    CHECK_THROWS_AS(sliding_stats(from_values({1, 2}), 3), SeriesTooShort);
}

TEST_CASE("distance_profile on an affine ramp is zero everywhere") {
    std::vector<double> ramp(32);
    for (std::size_t i = 0; i < 32; ++i) {
        ramp[i] = static_cast<double>(i);
    }
    const Series s = from_values(ramp);
    const SlidingStats stats = sliding_stats(s, 4);
    const std::vector<double> profile = distance_profile(s, 0, 4, stats);
    REQUIRE(profile.size() == 29);
    for (double d : profile) {
        CHECK(d <= 1e-7);
    }
}

TEST_CASE("distance_profile is zero against itself and matches the z-norm oracle") {
    const Series s = random_series(7, 128);
    const SlidingStats stats = sliding_stats(s, 8);
    const std::vector<double> profile = distance_profile(s, 17, 8, stats);
    CHECK(profile[17] <= 1e-8);
    for (std::size_t j = 0; j < profile.size(); ++j) {
        CHECK(std::abs(profile[j] - znorm_distance(s.values, 17, j, 8)) <= 1e-8);
    }
    CHECK_THROWS_AS(distance_profile(s, 122, 8, stats), IndexOutOfRange);
}

TEST_CASE("matrix_profile of a ramp and of a constant series is all zero") {
    std::vector<double> ramp(64);
    for (std::size_t i = 0; i < 64; ++i) {
        ramp[i] = 0.25 * static_cast<double>(i) - 3.0;
    }
    const MatrixProfile mp = matrix_profile(from_values(ramp), 8);
    for (double d : mp.distances) {
        CHECK(d <= 1e-6);
    }

    const MatrixProfile flat = matrix_profile(from_values(std::vector<double>(64, 5.0)), 8);
    for (double d : flat.distances) {
        CHECK(d == 0.0);
    }
    // Lowest admissible neighbor wins ties; the brute force agrees exactly.
    const MatrixProfile flat_bf =
        matrix_profile_bruteforce(from_values(std::vector<double>(64, 5.0)), 8);
    CHECK(flat.indices == flat_bf.indices);
    for (std::size_t i = 0; i < flat.indices.size(); ++i) {
        const std::size_t idx = flat.indices[i];
        const std::size_t gap = idx > i ? idx - i : i - idx;
        CHECK(gap > flat.exclusion_radius);
    }
}

TEST_CASE("bruteforce finds a planted motif pair exactly") {
    Rng rng(99);
    std::vector<double> values(128);
    for (double& v : values) {
        v = rng.normal();
    }
    const std::size_t m = 16;
    std::vector<double> pattern(m);
    for (std::size_t k = 0; k < m; ++k) {
        pattern[k] = 3.0 * std::sin(2.0 * M_PI * static_cast<double>(k) / 16.0) +
                     1.5 * std::cos(2.0 * M_PI * static_cast<double>(k) / 5.0);
    }
    for (std::size_t k = 0; k < m; ++k) {
        values[10 + k] = pattern[k];
        values[40 + k] = pattern[k];
    }
    const MatrixProfile mp = matrix_profile_bruteforce(from_values(values), m);
    CHECK(mp.distances[10] <= 1e-6);
    CHECK(mp.distances[40] <= 1e-6);
    CHECK(mp.indices[10] == 40);
    CHECK(mp.indices[40] == 10);

    const MatrixProfile fast = matrix_profile(from_values(values), m);
    CHECK(fast.indices[10] == 40);
    CHECK(fast.indices[40] == 10);
}

TEST_CASE("matrix_profile equals brute force and the independent oracle on seeded inputs") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng pick(seed * 1000);
        const std::size_t m = static_cast<std::size_t>(pick.integer(4, 32));
        const std::size_t n =
            static_cast<std::size_t>(pick.integer(std::max<std::uint64_t>(64, 2 * m + 8), 256));
        const Series s = random_series(seed, n);

        const MatrixProfile fast = matrix_profile(s, m);
        const MatrixProfile brute = matrix_profile_bruteforce(s, m);
        const auto oracle = nearest_oracle(s.values, m, fast.exclusion_radius);

        REQUIRE(fast.size() == brute.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(std::abs(fast.distances[i] - brute.distances[i]) <= 1e-8);
            CHECK(std::abs(fast.distances[i] - oracle[i].best) <= 1e-8);
            if (oracle[i].runner_up - oracle[i].best > 1e-6) {
                CHECK(fast.indices[i] == brute.indices[i]);
                CHECK(fast.indices[i] == oracle[i].index);
            }
        }
    }
}

TEST_CASE("matrix_profile invariants: bounds, exclusion, scale invariance, determinism") {
    const Series s = random_series(123, 200);
    const std::size_t m = 12;
    const MatrixProfile mp = matrix_profile(s, m);
    const double bound = 2.0 * std::sqrt(static_cast<double>(m));
    for (std::size_t i = 0; i < mp.size(); ++i) {
        CHECK(mp.distances[i] >= 0.0);
        CHECK(mp.distances[i] <= bound + 1e-12);
        const std::size_t gap = mp.indices[i] > i ? mp.indices[i] - i : i - mp.indices[i];
        CHECK(gap > mp.exclusion_radius);
    }

    Series scaled = s;
    for (double& v : scaled.values) {
        v = 3.5 * v + 17.0;
    }
    const MatrixProfile mp_scaled = matrix_profile(scaled, m);
    const auto oracle = nearest_oracle(s.values, m, mp.exclusion_radius);
    for (std::size_t i = 0; i < mp.size(); ++i) {
        CHECK(std::abs(mp.distances[i] - mp_scaled.distances[i]) <= 1e-6);
        if (oracle[i].runner_up - oracle[i].best > 1e-6) {
            CHECK(mp.indices[i] == mp_scaled.indices[i]);
        }
    }

    const MatrixProfile again = matrix_profile(s, m);
    CHECK(again.distances == mp.distances);
    CHECK(again.indices == mp.indices);
}

TEST_CASE("matrix_profile preconditions") {
    CHECK_THROWS_AS(matrix_profile(random_series(5, 20), 12), SeriesTooShort);
    // n == 2m leaves interior positions with no admissible neighbor
    CHECK_THROWS_AS(matrix_profile(random_series(5, 16), 8), SeriesTooShort);
    CHECK_THROWS_AS(matrix_profile_bruteforce(random_series(5, 16), 8), SeriesTooShort);
}
