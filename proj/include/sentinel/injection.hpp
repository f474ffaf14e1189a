#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/pipeline.hpp"
#include "sentinel/series.hpp"

namespace sentinel {

/// Synthetic fleet description. Identical seeds produce bit-identical
/// fleets; per-series baselines mix stationary noise, periodic + noise, and
/// slow drift + noise, all sharing a low-amplitude common component so the
/// fleet stays weakly related.
struct FleetSpec {
    std::size_t n_series = 50;
    std::size_t length = 300;  // samples per series
    double sampling_interval = 6.0;
    std::uint64_t seed = 1;
};

std::vector<Series> generate_fleet(const FleetSpec& spec);

enum class EffectKind { drop_to_floor, oscillate, ramp_drift, level_shift, variance_burst };

const char* to_string(EffectKind kind);
EffectKind effect_kind_from_string(const std::string& name);

struct Effect {
    EffectKind kind = EffectKind::level_shift;
    double magnitude = 0.0;
};

/// One injected network event. Affected series are named explicitly or drawn
/// deterministically as a fleet fraction seeded by the scenario id. Each
/// affected series gets an individual onset offset in [0, onset_jitter_max]
/// so a single incident cascades across the fleet.
struct InjectionScenario {
    std::string scenario_id;
    std::string event_kind;
    std::vector<std::string> affected_series;  // explicit, or
    double affected_fraction = 0.0;            // resolved against the fleet
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    Effect effect;
    std::optional<Effect> secondary_effect;
    std::uint32_t onset_jitter_max = 8;
};

/// Applies the scenario over [start_ts, end_ts) of every affected series;
/// values outside the (jittered) window are left bit-identical, so the end
/// of the window produces the recovery regime change.
std::vector<Series> inject(std::vector<Series> fleet, const InjectionScenario& scenario);

/// Affected ids a scenario resolves to for a given fleet.
std::vector<std::string> resolve_affected(const std::vector<Series>& fleet,
                                          const InjectionScenario& scenario);

/// Smallest effect magnitude per archetype that still produces a
/// segmentation-detectable boundary at onset (calibrated in tests).
double min_detectable_magnitude(EffectKind kind);

/// The 30-event catalog: port_shut_down, port_flap, memory_leak and
/// transceiver_pull plus 26 archetype variants, all inside a 300-sample run.
std::vector<InjectionScenario> default_catalog();

/// The port_shut_down entry alone (start 50, end 100, 80% of the fleet).
InjectionScenario port_shut_down_scenario();

std::vector<InjectionScenario> catalog_from_json(const nlohmann::json& j);
nlohmann::json catalog_to_json(const std::vector<InjectionScenario>& catalog);
std::vector<InjectionScenario> load_catalog_file(const std::string& path);

/// Per-scenario detection outcome from an independent generate/inject/run.
struct ScenarioOutcome {
    std::string scenario_id;
    std::string event_kind;
    std::size_t participants = 0;
    bool detected = false;
    std::int64_t detection_delay = 0;  // detection_bin - start_ts
    bool recovery_detected = false;
    std::int64_t recovery_delay = 0;  // recovery detection_bin - end_ts
    std::size_t events_total = 0;
};

struct DetectionReport {
    std::uint64_t seed = 0;
    std::vector<ScenarioOutcome> outcomes;

    std::size_t detected_count() const;
    std::size_t recovered_count() const;
    std::string summary() const;  // e.g. "30/30 detected"
    nlohmann::json to_json() const;
};

/// Runs every scenario independently: fresh fleet (seed derived from spec
/// seed + scenario id), inject, full pipeline, record delays. Scenario runs
/// execute in parallel.
DetectionReport run_scenarios(const std::vector<InjectionScenario>& catalog,
                              const FleetSpec& spec, const PipelineConfig& config);

}  // namespace sentinel
