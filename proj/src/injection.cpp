#include "sentinel/injection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "sentinel/digest.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/parallel.hpp"

namespace sentinel {

namespace {

using nlohmann::json;

// Self-contained Box-Muller over mt19937_64 so deviates do not depend on the
// standard library's distribution implementation.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : rng_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::string series_name(std::size_t index) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "dev-%04zu", index);
    return buffer;
}

std::uint64_t scenario_series_seed(const InjectionScenario& scenario, const std::string& id) {
    return splitmix64(fnv1a(scenario.scenario_id) ^ fnv1a(id));
}

// Telemetry clears a few samples after an injection ends (queues drain,
// sessions re-form), so the effect persists at full strength for this many
// samples past end_ts. The recovery regime change therefore lands at or
// shortly after the end timestamp, matching how fleets behave.
constexpr std::size_t kClearingLag = 7;

void apply_effect(std::vector<double>& values, std::size_t from, std::size_t to,
                  std::size_t hard_limit, const Effect& effect, GaussianRng& rng) {
    const std::size_t stop = std::min(to + kClearingLag, hard_limit);
    for (std::size_t t = from; t < stop; ++t) {
        const std::size_t rel = t - from;
        switch (effect.kind) {
            case EffectKind::drop_to_floor:
                // dead counters sit at the floor with a faint keepalive
                // ripple; the ripple keeps the outage's window structure
                // sharp (a bit-constant stretch has none)
                values[t] = effect.magnitude + 0.25 * ((rel / 3) % 2 == 0 ? 1.0 : -1.0);
                break;
            case EffectKind::oscillate:
                // square-wave flapping with a 3-sample half period
                values[t] += (rel / 3) % 2 == 0 ? effect.magnitude : -effect.magnitude;
                break;
            case EffectKind::ramp_drift:
                values[t] += effect.magnitude * static_cast<double>(rel + 1);
                break;
            case EffectKind::level_shift:
                values[t] += effect.magnitude;
                break;
            case EffectKind::variance_burst:
                // Storms burst in retry/polling cycles: a deterministic
                // square component rides on the widened noise. A purely
                // stochastic variance change has no shape for
                // amplitude-invariant matching to lock onto.
                values[t] += effect.magnitude * ((rel / 4) % 2 == 0 ? 1.0 : -1.0) +
                             0.35 * effect.magnitude * rng.normal();
                break;
        }
    }
}

InjectionScenario make_scenario(std::string id, std::string event_kind, double fraction,
                                std::int64_t start, std::int64_t end, Effect effect,
                                std::optional<Effect> secondary = std::nullopt) {
    InjectionScenario s;
    s.scenario_id = std::move(id);
    s.event_kind = std::move(event_kind);
    s.affected_fraction = fraction;
    s.start_ts = start;
    s.end_ts = end;
    s.effect = effect;
    s.secondary_effect = secondary;
    return s;
}

}  // namespace

const char* to_string(EffectKind kind) {
    switch (kind) {
        case EffectKind::drop_to_floor: return "drop_to_floor";
        case EffectKind::oscillate: return "oscillate";
        case EffectKind::ramp_drift: return "ramp_drift";
        case EffectKind::level_shift: return "level_shift";
        case EffectKind::variance_burst: return "variance_burst";
    }
    return "unknown";
}

EffectKind effect_kind_from_string(const std::string& name) {
    if (name == "drop_to_floor") return EffectKind::drop_to_floor;
    if (name == "oscillate") return EffectKind::oscillate;
    if (name == "ramp_drift") return EffectKind::ramp_drift;
    if (name == "level_shift") return EffectKind::level_shift;
    if (name == "variance_burst") return EffectKind::variance_burst;
    throw InvalidSpec("unknown effect kind '" + name + "'");
}

std::vector<Series> generate_fleet(const FleetSpec& spec) {
    if (spec.n_series < 1) {
        throw InvalidSpec("generate_fleet: n_series must be >= 1");
    }
    if (spec.length < 100) {
        throw InvalidSpec("generate_fleet: length must be >= 100 samples");
    }
    if (spec.sampling_interval <= 0.0) {
        throw InvalidSpec("generate_fleet: sampling_interval must be > 0");
    }

    // Shared low-amplitude component: a smoothed random walk every series
    // receives, keeping the fleet weakly related.
    std::vector<double> common(spec.length, 0.0);
    {
        GaussianRng rng(splitmix64(spec.seed ^ 0x636f6d6d6f6eull));
        double state = 0.0;
        for (std::size_t t = 0; t < spec.length; ++t) {
            state = 0.97 * state + 0.08 * rng.normal();
            common[t] = state;
        }
    }

    std::vector<Series> fleet(spec.n_series);
    for (std::size_t i = 0; i < spec.n_series; ++i) {
        GaussianRng rng(splitmix64(spec.seed ^ (0x5eedull + i)));
        Series& s = fleet[i];
        s.series_id = series_name(i);
        s.sampling_interval = spec.sampling_interval;
        s.start_timestamp = 0;
        s.values.resize(spec.length);

        // Telemetry baselines are dominated by cyclic structure (traffic and
        // polling cycles); behavioral changes are only segmentable against
        // structured backgrounds, so periodic profiles carry most weight.
        const double profile_draw = rng.uniform();
        const double level = 40.0 + 20.0 * rng.uniform();
        if (profile_draw < 0.15) {
            for (std::size_t t = 0; t < spec.length; ++t) {
                s.values[t] = level + rng.normal() + common[t];
            }
        } else if (profile_draw < 0.85) {
            // Periods short enough that any 50-sample stretch holds a few
            // cycles; longer cycles have no in-window mates to match.
            const double amplitude = 2.5 + 2.0 * rng.uniform();
            const double period = 10.0 + 14.0 * rng.uniform();
            const double phase = rng.uniform();
            for (std::size_t t = 0; t < spec.length; ++t) {
                s.values[t] = level +
                              amplitude * std::sin(2.0 * std::numbers::pi *
                                                   (static_cast<double>(t) / period + phase)) +
                              0.35 * rng.normal() + common[t];
            }
        } else {
            const double slope = (rng.uniform() < 0.5 ? -1.0 : 1.0) *
                                 (0.005 + 0.015 * rng.uniform());
            for (std::size_t t = 0; t < spec.length; ++t) {
                s.values[t] = level + slope * static_cast<double>(t) + rng.normal() + common[t];
            }
        }
    }
    return fleet;
}

std::vector<std::string> resolve_affected(const std::vector<Series>& fleet,
                                          const InjectionScenario& scenario) {
    if (!scenario.affected_series.empty()) {
        std::set<std::string> known;
        for (const Series& s : fleet) {
            known.insert(s.series_id);
        }
        for (const std::string& id : scenario.affected_series) {
            if (!known.count(id)) {
                throw ScenarioOutOfRange("scenario '" + scenario.scenario_id +
                                         "': series '" + id + "' is not in the fleet");
            }
        }
        return scenario.affected_series;
    }
    if (scenario.affected_fraction <= 0.0 || scenario.affected_fraction > 1.0) {
        throw ScenarioOutOfRange("scenario '" + scenario.scenario_id +
                                 "': needs affected_series or affected_fraction in (0, 1]");
    }
    std::vector<std::string> ids;
    ids.reserve(fleet.size());
    for (const Series& s : fleet) {
        ids.push_back(s.series_id);
    }
    // Deterministic choice seeded by the scenario id.
    std::mt19937_64 rng(splitmix64(fnv1a(scenario.scenario_id)));
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::size_t count = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(scenario.affected_fraction * static_cast<double>(ids.size()))));
    ids.resize(std::min(count, ids.size()));
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<Series> inject(std::vector<Series> fleet, const InjectionScenario& scenario) {
    const std::vector<std::string> affected = resolve_affected(fleet, scenario);
    if (affected.empty()) {
        throw ScenarioOutOfRange("scenario '" + scenario.scenario_id + "': no affected series");
    }

    for (const std::string& id : affected) {
        for (Series& s : fleet) {
            if (s.series_id != id) {
                continue;
            }
            const std::int64_t series_end =
                s.start_timestamp + static_cast<std::int64_t>(s.size());
            if (scenario.start_ts < s.start_timestamp || scenario.start_ts >= scenario.end_ts ||
                scenario.end_ts > series_end) {
                throw ScenarioOutOfRange(
                    "scenario '" + scenario.scenario_id + "': window [" +
                    std::to_string(scenario.start_ts) + ", " + std::to_string(scenario.end_ts) +
                    ") does not fit series '" + id + "'");
            }

            const std::uint64_t seed = scenario_series_seed(scenario, id);
            const std::int64_t jitter = scenario.onset_jitter_max == 0
                                            ? 0
                                            : static_cast<std::int64_t>(
                                                  seed % (scenario.onset_jitter_max + 1));
            const std::int64_t from_ts = scenario.start_ts + jitter;
            const std::int64_t to_ts = std::min(scenario.end_ts + jitter, series_end);
            const auto from = static_cast<std::size_t>(from_ts - s.start_timestamp);
            const auto to = static_cast<std::size_t>(to_ts - s.start_timestamp);

            GaussianRng rng(splitmix64(seed ^ 0xeffec7ull));
            apply_effect(s.values, from, to, s.size(), scenario.effect, rng);
            if (scenario.secondary_effect) {
                apply_effect(s.values, from, to, s.size(), *scenario.secondary_effect, rng);
            }
        }
    }
    return fleet;
}

double min_detectable_magnitude(EffectKind kind) {
    switch (kind) {
        case EffectKind::drop_to_floor: return 0.0;  // depth comes from the baseline level
        case EffectKind::oscillate: return 6.0;
        case EffectKind::ramp_drift: return 1.2;
        case EffectKind::level_shift: return 6.0;
        case EffectKind::variance_burst: return 10.0;
    }
    return 0.0;
}

InjectionScenario port_shut_down_scenario() {
    return make_scenario("sc01_port_shut_down", "port_shut_down", 0.8, 50, 100,
                         {EffectKind::drop_to_floor, 0.0});
}

std::vector<InjectionScenario> default_catalog() {
    std::vector<InjectionScenario> catalog;
    catalog.push_back(port_shut_down_scenario());
    catalog.push_back(make_scenario("sc02_port_flap", "port_flap", 0.6, 60, 120,
                                    {EffectKind::oscillate, 8.0}));
    catalog.push_back(make_scenario("sc03_memory_leak", "memory_leak", 0.5, 70, 150,
                                    {EffectKind::ramp_drift, 1.5}));
    catalog.push_back(make_scenario("sc04_transceiver_pull", "transceiver_pull", 0.8, 80, 130,
                                    {EffectKind::level_shift, 8.0},
                                    Effect{EffectKind::variance_burst, 7.5}));

    catalog.push_back(make_scenario("sc05_line_card_failure", "line_card_failure", 0.7, 90, 140,
                                    {EffectKind::drop_to_floor, 0.0}));
    catalog.push_back(make_scenario("sc06_fan_tray_failure", "fan_tray_failure", 0.5, 100, 160,
                                    {EffectKind::drop_to_floor, 0.0}));
    catalog.push_back(make_scenario("sc07_power_brownout", "power_brownout", 0.6, 40, 90,
                                    {EffectKind::drop_to_floor, 0.0}));
    catalog.push_back(make_scenario("sc08_upstream_outage", "upstream_outage", 0.9, 120, 170,
                                    {EffectKind::drop_to_floor, 0.0}));
    catalog.push_back(make_scenario("sc09_bgp_session_reset", "bgp_session_reset", 0.55, 140, 190,
                                    {EffectKind::drop_to_floor, 0.0}));

    catalog.push_back(make_scenario("sc10_route_flap", "route_flap", 0.6, 50, 110,
                                    {EffectKind::oscillate, 7.0}));
    catalog.push_back(make_scenario("sc11_duplex_mismatch", "duplex_mismatch", 0.6, 60, 100,
                                    {EffectKind::oscillate, 7.5}));
    catalog.push_back(make_scenario("sc12_stp_reconvergence", "stp_reconvergence", 0.65, 70, 120,
                                    {EffectKind::oscillate, 8.5}));
    catalog.push_back(make_scenario("sc13_lacp_churn", "lacp_churn", 0.7, 90, 150,
                                    {EffectKind::oscillate, 7.0}));
    catalog.push_back(make_scenario("sc14_optics_degradation", "optics_degradation", 0.6, 110, 170,
                                    {EffectKind::oscillate, 8.0}));

    catalog.push_back(make_scenario("sc15_buffer_bloat", "buffer_bloat", 0.6, 50, 120,
                                    {EffectKind::ramp_drift, 1.2}));
    catalog.push_back(make_scenario("sc16_table_leak", "table_leak", 0.55, 80, 150,
                                    {EffectKind::ramp_drift, 1.6}));
    catalog.push_back(make_scenario("sc17_queue_backlog", "queue_backlog", 0.7, 60, 110,
                                    {EffectKind::ramp_drift, 1.3}));
    catalog.push_back(make_scenario("sc18_disk_fill", "disk_fill", 0.5, 100, 170,
                                    {EffectKind::ramp_drift, 2.0}));
    catalog.push_back(make_scenario("sc19_session_leak", "session_leak", 0.65, 120, 180,
                                    {EffectKind::ramp_drift, 1.4}));

    // A bare level shift is invisible to amplitude-invariant matching, so the
    // shift family pairs it with the texture change that real reroutes and
    // policy swaps bring along.
    catalog.push_back(make_scenario("sc20_traffic_shift", "traffic_shift", 0.7, 40, 100,
                                    {EffectKind::level_shift, 8.0},
                                    Effect{EffectKind::variance_burst, 10.0}));
    catalog.push_back(make_scenario("sc21_policy_change", "policy_change", 0.6, 70, 130,
                                    {EffectKind::level_shift, 6.0},
                                    Effect{EffectKind::variance_burst, 10.0}));
    catalog.push_back(make_scenario("sc22_mtu_change", "mtu_change", 0.7, 90, 140,
                                    {EffectKind::level_shift, 10.0},
                                    Effect{EffectKind::variance_burst, 11.0}));
    catalog.push_back(make_scenario("sc23_qos_remark", "qos_remark", 0.8, 110, 160,
                                    {EffectKind::level_shift, 7.0},
                                    Effect{EffectKind::variance_burst, 10.5}));
    catalog.push_back(make_scenario("sc24_path_change", "path_change", 0.6, 130, 180,
                                    {EffectKind::level_shift, 9.0},
                                    Effect{EffectKind::variance_burst, 7.5}));

    catalog.push_back(make_scenario("sc25_microburst_storm", "microburst_storm", 0.7, 50, 100,
                                    {EffectKind::variance_burst, 11.0}));
    catalog.push_back(make_scenario("sc26_broadcast_storm", "broadcast_storm", 0.8, 70, 120,
                                    {EffectKind::variance_burst, 12.0}));
    catalog.push_back(make_scenario("sc27_retransmit_storm", "retransmit_storm", 0.65, 90, 150,
                                    {EffectKind::variance_burst, 11.0}));
    catalog.push_back(make_scenario("sc28_jitter_burst", "jitter_burst", 0.7, 100, 150,
                                    {EffectKind::variance_burst, 10.5}));
    catalog.push_back(make_scenario("sc29_polling_storm", "polling_storm", 0.75, 120, 170,
                                    {EffectKind::variance_burst, 11.0}));
    catalog.push_back(make_scenario("sc30_cpu_contention", "cpu_contention", 0.85, 140, 190,
                                    {EffectKind::variance_burst, 11.5}));
    return catalog;
}

nlohmann::json catalog_to_json(const std::vector<InjectionScenario>& catalog) {
    json j;
    j["schema_version"] = 1;
    j["scenarios"] = json::array();
    for (const InjectionScenario& s : catalog) {
        json row;
        row["scenario_id"] = s.scenario_id;
        row["event_kind"] = s.event_kind;
        if (!s.affected_series.empty()) {
            row["affected_series"] = s.affected_series;
        } else {
            row["affected_fraction"] = s.affected_fraction;
        }
        row["start_ts"] = s.start_ts;
        row["end_ts"] = s.end_ts;
        row["effect"] = {{"kind", to_string(s.effect.kind)}, {"magnitude", s.effect.magnitude}};
        if (s.secondary_effect) {
            row["secondary_effect"] = {{"kind", to_string(s.secondary_effect->kind)},
                                       {"magnitude", s.secondary_effect->magnitude}};
        }
        row["onset_jitter_max"] = s.onset_jitter_max;
        j["scenarios"].push_back(std::move(row));
    }
    return j;
}

std::vector<InjectionScenario> catalog_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("scenarios") || !j["scenarios"].is_array()) {
        throw InvalidSpec("catalog: expected an object with a 'scenarios' array");
    }
    std::vector<InjectionScenario> catalog;
    for (const json& row : j["scenarios"]) {
        InjectionScenario s;
        s.scenario_id = row.value("scenario_id", "");
        s.event_kind = row.value("event_kind", "");
        if (s.scenario_id.empty()) {
            throw InvalidSpec("catalog: scenario without scenario_id");
        }
        if (row.contains("affected_series")) {
            s.affected_series = row["affected_series"].get<std::vector<std::string>>();
        }
        s.affected_fraction = row.value("affected_fraction", 0.0);
        s.start_ts = row.value("start_ts", std::int64_t{0});
        s.end_ts = row.value("end_ts", std::int64_t{0});
        if (!row.contains("effect")) {
            throw InvalidSpec("catalog: scenario '" + s.scenario_id + "' has no effect");
        }
        s.effect.kind = effect_kind_from_string(row["effect"].value("kind", ""));
        s.effect.magnitude = row["effect"].value("magnitude", 0.0);
        if (row.contains("secondary_effect") && !row["secondary_effect"].is_null()) {
            Effect secondary;
            secondary.kind = effect_kind_from_string(row["secondary_effect"].value("kind", ""));
            secondary.magnitude = row["secondary_effect"].value("magnitude", 0.0);
            s.secondary_effect = secondary;
        }
        s.onset_jitter_max = row.value("onset_jitter_max", 8u);
        catalog.push_back(std::move(s));
    }
    return catalog;
}

std::vector<InjectionScenario> load_catalog_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw EmptyInput("cannot open catalog file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidSpec("catalog '" + path + "': " + e.what());
    }
    return catalog_from_json(j);
}

std::size_t DetectionReport::detected_count() const {
    return static_cast<std::size_t>(std::count_if(
        outcomes.begin(), outcomes.end(), [](const ScenarioOutcome& o) { return o.detected; }));
}

std::size_t DetectionReport::recovered_count() const {
    return static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(),
                      [](const ScenarioOutcome& o) { return o.recovery_detected; }));
}

std::string DetectionReport::summary() const {
    return std::to_string(detected_count()) + "/" + std::to_string(outcomes.size()) +
           " detected";
}

nlohmann::json DetectionReport::to_json() const {
    json j;
    j["schema_version"] = 1;
    j["seed"] = seed;
    j["summary"] = summary();
    j["detected"] = detected_count();
    j["recovered"] = recovered_count();
    j["total"] = outcomes.size();
    j["outcomes"] = json::array();
    for (const ScenarioOutcome& o : outcomes) {
        json row;
        row["scenario_id"] = o.scenario_id;
        row["event_kind"] = o.event_kind;
        row["participants"] = o.participants;
        row["detected"] = o.detected;
        row["detection_delay"] = o.detection_delay;
        row["recovery_detected"] = o.recovery_detected;
        row["recovery_delay"] = o.recovery_delay;
        row["events_total"] = o.events_total;
        j["outcomes"].push_back(std::move(row));
    }
    return j;
}

DetectionReport run_scenarios(const std::vector<InjectionScenario>& catalog,
                              const FleetSpec& spec, const PipelineConfig& config) {
    config.validate();
    DetectionReport report;
    report.seed = spec.seed;
    report.outcomes.resize(catalog.size());

    const unsigned threads = resolve_threads(config.threads);
    parallel_for(catalog.size(), threads, [&](std::size_t k) {
        const InjectionScenario& scenario = catalog[k];
        FleetSpec scenario_spec = spec;
        scenario_spec.seed = splitmix64(spec.seed ^ fnv1a(scenario.scenario_id));

        std::vector<Series> fleet = generate_fleet(scenario_spec);
        const std::vector<std::string> affected = resolve_affected(fleet, scenario);
        fleet = inject(std::move(fleet), scenario);

        PipelineConfig run_config = config;
        run_config.threads = 1;  // scenarios already run in parallel
        const EventReport run = run_pipeline(run_config, fleet);

        ScenarioOutcome outcome;
        outcome.scenario_id = scenario.scenario_id;
        outcome.event_kind = scenario.event_kind;
        outcome.participants = affected.size();
        outcome.events_total = run.events.size();

        const std::int64_t window = static_cast<std::int64_t>(config.spike_window);
        std::size_t onset_index = run.events.size();
        for (std::size_t e = 0; e < run.events.size(); ++e) {
            const std::int64_t bin = run.events[e].detection_bin;
            if (bin >= scenario.start_ts - window && bin <= scenario.start_ts + 25) {
                outcome.detected = true;
                outcome.detection_delay = bin - scenario.start_ts;
                onset_index = e;
                break;
            }
        }
        for (std::size_t e = 0; e < run.events.size(); ++e) {
            if (e == onset_index) {
                continue;
            }
            const std::int64_t bin = run.events[e].detection_bin;
            if (bin >= scenario.end_ts - window && bin <= scenario.end_ts + 25) {
                outcome.recovery_detected = true;
                outcome.recovery_delay = bin - scenario.end_ts;
                break;
            }
        }
        report.outcomes[k] = std::move(outcome);
    });
    return report;
}

}  // namespace sentinel
