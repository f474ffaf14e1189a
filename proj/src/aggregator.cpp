#include "sentinel/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "sentinel/errors.hpp"

namespace sentinel {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) {
        return 0.0;
    }
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) {
        return v[mid];
    }
    return 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

FleetTimeline common_timeline(const std::vector<Series>& fleet) {
    if (fleet.empty()) {
        throw EmptyInput("common_timeline: fleet is empty");
    }
    FleetTimeline timeline;
    timeline.sampling_interval = fleet.front().sampling_interval;
    for (const Series& s : fleet) {
        const double rel = std::abs(s.sampling_interval - timeline.sampling_interval) /
                           timeline.sampling_interval;
        if (rel > 0.01) {
            throw MixedTimelines("series '" + s.series_id + "' samples every " +
                                 std::to_string(s.sampling_interval) + " s, fleet uses " +
                                 std::to_string(timeline.sampling_interval) + " s");
        }
        const std::int64_t end = s.start_timestamp + static_cast<std::int64_t>(s.size());
        timeline.length = std::max(timeline.length, end);
    }
    return timeline;
}

std::uint64_t RegimeHistogram::total() const {
    std::uint64_t sum = 0;
    for (std::uint32_t c : counts) {
        sum += c;
    }
    return sum;
}

RegimeHistogram build_histogram(const std::vector<RegimeChange>& changes,
                                std::int64_t bin_width, const FleetTimeline& timeline) {
    if (bin_width < 1) {
        throw InvalidConfig("build_histogram: bin_width must be >= 1");
    }
    RegimeHistogram hist;
    hist.bin_width = bin_width;
    const std::size_t bins =
        static_cast<std::size_t>((timeline.length + bin_width - 1) / bin_width);
    hist.counts.assign(bins, 0);
    hist.contributors.assign(bins, {});

    std::vector<std::set<std::string>> per_bin(bins);
    for (const RegimeChange& change : changes) {
        if (change.timestamp < 0 || change.timestamp >= timeline.length) {
            throw MixedTimelines("regime change of series '" + change.series_id +
                                 "' at timestamp " + std::to_string(change.timestamp) +
                                 " is off the fleet timeline [0, " +
                                 std::to_string(timeline.length) + ")");
        }
        per_bin[static_cast<std::size_t>(change.timestamp / bin_width)].insert(change.series_id);
    }
    for (std::size_t b = 0; b < bins; ++b) {
        hist.counts[b] = static_cast<std::uint32_t>(per_bin[b].size());
        hist.contributors[b].assign(per_bin[b].begin(), per_bin[b].end());
    }
    return hist;
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::candidate: return "candidate";
        case EventKind::interest: return "interest";
        case EventKind::no_interest: return "no_interest";
        case EventKind::recovery: return "recovery";
    }
    return "unknown";
}

std::vector<EventOfInterest> detect_spikes(const RegimeHistogram& hist, const SpikeParams& params,
                                           std::size_t fleet_size) {
    if (fleet_size < 1) {
        throw InvalidConfig("detect_spikes: fleet_size must be >= 1");
    }
    if (params.spike_window < 1) {
        throw InvalidConfig("detect_spikes: spike_window must be >= 1");
    }
    const std::size_t bins = hist.bins();

    // Windowed deduplicated count: how many distinct series changed within
    // the trailing spike_window bins ending at b.
    std::vector<double> windowed(bins, 0.0);
    std::map<std::string, std::size_t> active;
    for (std::size_t b = 0; b < bins; ++b) {
        for (const std::string& id : hist.contributors[b]) {
            ++active[id];
        }
        if (b >= params.spike_window) {
            for (const std::string& id : hist.contributors[b - params.spike_window]) {
                auto it = active.find(id);
                if (--(it->second) == 0) {
                    active.erase(it);
                }
            }
        }
        windowed[b] = static_cast<double>(active.size());
    }

    const double floor_threshold = params.min_fraction * static_cast<double>(fleet_size);
    std::vector<bool> fires(bins, false);
    std::vector<double> thresholds(bins, 0.0);
    std::vector<bool> floor_bound(bins, false);
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b > params.baseline_window ? b - params.baseline_window : 0;
        std::vector<double> baseline(windowed.begin() + static_cast<std::ptrdiff_t>(lo),
                                     windowed.begin() + static_cast<std::ptrdiff_t>(b));
        const double med = median_of(baseline);
        for (double& v : baseline) {
            v = std::abs(v - med);
        }
        const double mad = median_of(baseline);
        const double robust = med + params.k_mad * mad;
        thresholds[b] = std::max(robust, floor_threshold);
        floor_bound[b] = floor_threshold >= robust;
        fires[b] = windowed[b] > thresholds[b];
    }

    std::vector<EventOfInterest> events;
    std::size_t b = 0;
    while (b < bins) {
        if (!fires[b]) {
            ++b;
            continue;
        }
        std::size_t last = b;
        while (last + 1 < bins && fires[last + 1]) {
            ++last;
        }

        EventOfInterest event;
        event.detection_bin = static_cast<std::int64_t>(b);
        std::size_t peak = b;
        for (std::size_t k = b; k <= last; ++k) {
            if (windowed[k] > windowed[peak]) {
                peak = k;
            }
        }
        event.peak_bin = static_cast<std::int64_t>(peak);
        event.magnitude = static_cast<std::uint32_t>(windowed[peak]);

        const std::size_t from = b >= params.spike_window - 1 ? b - (params.spike_window - 1) : 0;
        for (std::size_t k = from; k <= last; ++k) {
            event.participants.insert(hist.contributors[k].begin(), hist.contributors[k].end());
        }

        std::ostringstream why;
        why << "windowed count " << windowed[peak] << " over " << params.spike_window
            << " bin(s) exceeded threshold " << thresholds[b] << " at bin " << b << " (rule="
            << (floor_bound[b] ? "fleet_fraction_floor" : "robust_baseline")
            << ", median+" << params.k_mad << "*MAD vs " << params.min_fraction << "*fleet of "
            << fleet_size << ")";
        event.explanation = why.str();

        events.push_back(std::move(event));
        b = last + 1;
    }
    return events;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

void pair_recovery(std::vector<EventOfInterest>& events, std::int64_t prior_event_horizon) {
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].detection_bin < events[i - 1].detection_bin) {
            throw InvalidConfig("pair_recovery: events must be sorted by detection_bin");
        }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].kind == EventKind::recovery) {
            continue;
        }
        // Most recent open event within the horizon wins.
        for (std::size_t back = i; back > 0; --back) {
            const std::size_t p = back - 1;
            if (events[p].kind == EventKind::recovery || events[p].paired_event) {
                continue;
            }
            const std::int64_t gap = events[i].detection_bin - events[p].detection_bin;
            if (gap <= 0) {
                continue;
            }
            if (gap > prior_event_horizon) {
                break;
            }
            if (jaccard(events[i].participants, events[p].participants) >= 0.5) {
                events[i].kind = EventKind::recovery;
                events[i].paired_event = p;
                events[p].paired_event = i;
                events[i].explanation += "; recovery of event at bin " +
                                         std::to_string(events[p].detection_bin);
                break;
            }
        }
    }
}

int magnitude_band(std::uint32_t magnitude) {
    return static_cast<int>(std::floor(std::log2(std::max(1u, magnitude))));
}

void classify_event(EventOfInterest& event, PatternMemory& memory) {
    if (event.kind != EventKind::candidate) {
        throw InvalidConfig("classify_event: event already classified as " +
                            std::string(to_string(event.kind)));
    }
    const int band = magnitude_band(event.magnitude);

    constexpr double kMatchJaccard = 0.7;
    std::size_t best = memory.signatures.size();
    double best_score = 0.0;
    for (std::size_t s = 0; s < memory.signatures.size(); ++s) {
        const PatternSignature& sig = memory.signatures[s];
        if (sig.magnitude_band != band) {
            continue;
        }
        const double score = jaccard(event.participants, sig.participants);
        if (score < kMatchJaccard) {
            continue;
        }
        if (best == memory.signatures.size() || score > best_score) {
            best = s;
            best_score = score;
        }
    }

    if (best == memory.signatures.size()) {
        PatternSignature sig;
        sig.participants = event.participants;
        sig.magnitude_band = band;
        sig.occurrences = 1;
        sig.last_seen = event.detection_bin;
        memory.signatures.push_back(std::move(sig));
        event.kind = EventKind::interest;
        event.explanation += "; first sighting of this signature";
        return;
    }

    PatternSignature& sig = memory.signatures[best];
    const std::uint64_t prior = sig.occurrences;
    sig.occurrences += 1;
    sig.last_seen = event.detection_bin;
    if (prior >= memory.no_interest_threshold && !sig.operator_objection) {
        event.kind = EventKind::no_interest;
        event.explanation += "; recurring signature, sighting " + std::to_string(prior + 1) +
                             " > threshold " + std::to_string(memory.no_interest_threshold);
    } else {
        event.kind = EventKind::interest;
        event.explanation += "; signature sighting " + std::to_string(prior + 1) + " of " +
                             std::to_string(memory.no_interest_threshold + 1) +
                             " before no_interest";
    }
}

}  // namespace sentinel
