#include "sentinel/cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "sentinel/digest.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/injection.hpp"
#include "sentinel/metamodel.hpp"
#include "sentinel/pipeline.hpp"
#include "sentinel/telemetry_io.hpp"

namespace sentinel {

namespace {

using nlohmann::json;

/// Flags set on the command line; only explicitly given ones override the
/// config file, which in turn overrides the defaults.
struct ConfigFlags {
    std::optional<std::size_t> m;
    std::optional<std::size_t> exclusion_radius;
    std::optional<std::size_t> edge_exclusion;
    std::optional<double> cac_threshold;
    std::optional<std::size_t> regime_exclusion;
    std::optional<std::size_t> chunk_length;
    std::optional<std::int64_t> bin_width;
    std::optional<double> k_mad;
    std::optional<double> min_fraction;
    std::optional<std::size_t> baseline_window;
    std::optional<std::size_t> spike_window;
    std::optional<std::int64_t> recovery_horizon;
    std::optional<std::uint64_t> no_interest_threshold;
    std::optional<double> sampling_interval;
    std::optional<unsigned> threads;
    std::string config_file;
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
    app->add_option("--config", flags.config_file, "JSON config file (flags override it)");
    app->add_option("--m", flags.m, "subsequence length in samples (default 10)");
    app->add_option("--exclusion-radius", flags.exclusion_radius,
                    "trivial-match exclusion half-width (default ceil(m/2))");
    app->add_option("--edge-exclusion", flags.edge_exclusion,
                    "CAC samples pinned at each end (default m)");
    app->add_option("--cac-threshold", flags.cac_threshold,
                    "CAC boundary threshold in (0,1) (default 0.45)");
    app->add_option("--regime-exclusion", flags.regime_exclusion,
                    "min sample gap between regime changes (default 2m)");
    app->add_option("--chunk-length", flags.chunk_length,
                    "segmentation chunk length in samples (default 4m+20)");
    app->add_option("--bin-width", flags.bin_width, "histogram bin width in timestamps");
    app->add_option("--k-mad", flags.k_mad, "MAD multiplier of the robust spike rule");
    app->add_option("--min-fraction", flags.min_fraction,
                    "fleet-fraction floor of the spike rule");
    app->add_option("--baseline-window", flags.baseline_window,
                    "trailing bins for the robust baseline");
    app->add_option("--spike-window", flags.spike_window,
                    "bins a spike may spread across (default 10)");
    app->add_option("--recovery-horizon", flags.recovery_horizon,
                    "max bins between onset and recovery");
    app->add_option("--no-interest-threshold", flags.no_interest_threshold,
                    "recurrences before a signature turns no_interest");
    app->add_option("--sampling-interval", flags.sampling_interval,
                    "seconds between samples (default 6)");
    app->add_option("--threads", flags.threads, "worker threads (0 = auto)");
}

PipelineConfig build_config(const ConfigFlags& flags) {
    PipelineConfig config;
    if (!flags.config_file.empty()) {
        std::ifstream in(flags.config_file);
        if (!in) {
            throw InvalidConfig("cannot open config file '" + flags.config_file + "'");
        }
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw InvalidConfig("config file '" + flags.config_file + "': " + e.what());
        }
        config = PipelineConfig::from_json(j);
    }
    if (flags.m) config.m = *flags.m;
    if (flags.exclusion_radius) config.exclusion_radius = *flags.exclusion_radius;
    if (flags.edge_exclusion) config.edge_exclusion = *flags.edge_exclusion;
    if (flags.cac_threshold) config.cac_threshold = *flags.cac_threshold;
    if (flags.regime_exclusion) config.regime_exclusion = *flags.regime_exclusion;
    if (flags.chunk_length) config.chunk_length = *flags.chunk_length;
    if (flags.bin_width) config.bin_width = *flags.bin_width;
    if (flags.k_mad) config.k_mad = *flags.k_mad;
    if (flags.min_fraction) config.min_fraction = *flags.min_fraction;
    if (flags.baseline_window) config.baseline_window = *flags.baseline_window;
    if (flags.spike_window) config.spike_window = *flags.spike_window;
    if (flags.recovery_horizon) config.recovery_horizon = *flags.recovery_horizon;
    if (flags.no_interest_threshold) config.no_interest_threshold = *flags.no_interest_threshold;
    if (flags.sampling_interval) config.sampling_interval = *flags.sampling_interval;
    if (flags.threads) config.threads = *flags.threads;
    config.validate();
    return config;
}

void write_text_file(const std::string& path, const std::string& what,
                     const std::function<void(std::ostream&)>& emit) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidConfig("cannot write " + what + " to '" + path + "'");
    }
    emit(out);
}

struct RunOptions {
    std::string input;
    std::string format = "csv";
    std::string output;
    std::string histogram_out;
    std::string graph_out;
    std::string memory_file;
    std::string expert_file;
};

int do_run(const RunOptions& opts, const PipelineConfig& config, bool graph_to_stdout) {
    std::vector<Series> fleet =
        parse_telemetry_file(opts.input, parse_format(opts.format));

    PatternMemory memory;
    if (!opts.memory_file.empty()) {
        std::ifstream in(opts.memory_file);
        if (in) {
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw InvalidConfig("memory file '" + opts.memory_file + "': " + e.what());
            }
            memory = memory_from_json(j);
        }
    }

    KnowledgeGraph graph;
    EventReport report = run_pipeline(config, fleet, memory, graph);

    if (!opts.expert_file.empty()) {
        std::ifstream in(opts.expert_file);
        if (!in) {
            throw InvalidConfig("cannot open expert file '" + opts.expert_file + "'");
        }
        graph.import_expert_jsonl(in);
        report.graph_nodes = graph.node_count();
        report.graph_edges = graph.edge_count();
    }

    if (!opts.histogram_out.empty()) {
        report.histogram_ref = opts.histogram_out;
        write_text_file(opts.histogram_out, "histogram",
                        [&](std::ostream& out) { report.write_histogram_tsv(out); });
    }
    if (!opts.graph_out.empty()) {
        report.graph_ref = opts.graph_out;
        write_text_file(opts.graph_out, "graph export",
                        [&](std::ostream& out) { graph.export_jsonl(out); });
    }
    if (!opts.memory_file.empty()) {
        write_text_file(opts.memory_file, "pattern memory",
                        [&](std::ostream& out) { out << memory_to_json(memory).dump(2) << '\n'; });
    }

    if (graph_to_stdout) {
        graph.export_jsonl(std::cout);
    } else if (!opts.output.empty()) {
        write_text_file(opts.output, "report",
                        [&](std::ostream& out) { report.write_jsonl(out); });
    } else {
        report.write_jsonl(std::cout);
    }
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"regime-sentinel: fleet-level event detection over network telemetry"};
    app.name("sentinel");
    app.require_subcommand(1);

    ConfigFlags run_flags;
    RunOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "ingest telemetry, detect events, emit the report");
    run->add_option("--input", run_opts.input, "telemetry file")->required();
    run->add_option("--format", run_opts.format, "csv or jsonl (default csv)");
    run->add_option("--output", run_opts.output, "report path (default stdout)");
    run->add_option("--histogram", run_opts.histogram_out, "write the histogram TSV here");
    run->add_option("--graph", run_opts.graph_out, "write the graph export here");
    run->add_option("--memory", run_opts.memory_file,
                    "pattern-memory JSON, loaded before and saved after the run");
    run->add_option("--expert", run_opts.expert_file,
                    "expert L2 relations (graph export format) imported after the run");
    add_config_flags(run, run_flags);

    ConfigFlags sim_flags;
    std::string sim_catalog;
    std::string sim_output;
    std::string sim_emit_catalog;
    std::string sim_dump_fleet;
    std::uint64_t sim_seed = 1;
    std::size_t sim_n_series = 50;
    std::size_t sim_length = 300;
    CLI::App* simulate =
        app.add_subcommand("simulate", "run the injection catalog through the pipeline");
    simulate->add_option("--catalog", sim_catalog,
                         "scenario catalog JSON (default: the built-in 30)");
    simulate->add_option("--seed", sim_seed, "fleet seed (default 1)");
    simulate->add_option("--n-series", sim_n_series, "series per scenario fleet (default 50)");
    simulate->add_option("--length", sim_length, "samples per series (default 300)");
    simulate->add_option("--output", sim_output, "detection report path (default stdout)");
    simulate->add_option("--emit-catalog", sim_emit_catalog,
                         "write the built-in catalog JSON here and exit");
    simulate->add_option("--dump-fleet", sim_dump_fleet,
                         "also write the first scenario's injected fleet as CSV");
    add_config_flags(simulate, sim_flags);

    ConfigFlags profile_flags;
    std::string profile_input;
    std::string profile_format = "csv";
    std::string profile_series;
    std::string profile_output;
    CLI::App* profile = app.add_subcommand(
        "profile", "dump one series' matrix profile and corrected arc curve");
    profile->add_option("--input", profile_input, "telemetry file")->required();
    profile->add_option("--format", profile_format, "csv or jsonl (default csv)");
    profile->add_option("--series", profile_series, "series_id to profile")->required();
    profile->add_option("--output", profile_output, "TSV path (default stdout)");
    add_config_flags(profile, profile_flags);

    ConfigFlags graph_flags;
    RunOptions graph_opts;
    CLI::App* graph_cmd = app.add_subcommand("graph", "knowledge-graph operations");
    graph_cmd->require_subcommand(1);
    CLI::App* graph_export = graph_cmd->add_subcommand(
        "export", "run the pipeline and print the graph as line-oriented JSON");
    graph_export->add_option("--input", graph_opts.input, "telemetry file")->required();
    graph_export->add_option("--format", graph_opts.format, "csv or jsonl (default csv)");
    graph_export->add_option("--expert", graph_opts.expert_file,
                             "expert L2 relations imported before the export");
    add_config_flags(graph_export, graph_flags);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (run->parsed()) {
            return do_run(run_opts, build_config(run_flags), false);
        }

        if (simulate->parsed()) {
            if (!sim_emit_catalog.empty()) {
                write_text_file(sim_emit_catalog, "catalog", [&](std::ostream& out) {
                    out << catalog_to_json(default_catalog()).dump(2) << '\n';
                });
                return 0;
            }
            const PipelineConfig config = build_config(sim_flags);
            const std::vector<InjectionScenario> catalog =
                sim_catalog.empty() ? default_catalog() : load_catalog_file(sim_catalog);

            FleetSpec spec;
            spec.n_series = sim_n_series;
            spec.length = sim_length;
            spec.sampling_interval = config.sampling_interval;
            spec.seed = sim_seed;

            if (!sim_dump_fleet.empty() && !catalog.empty()) {
                FleetSpec first = spec;
                first.seed = splitmix64(spec.seed ^ fnv1a(catalog.front().scenario_id));
                const std::vector<Series> fleet =
                    inject(generate_fleet(first), catalog.front());
                write_text_file(sim_dump_fleet, "fleet CSV",
                                [&](std::ostream& out) { write_csv(fleet, out); });
            }

            const DetectionReport report = run_scenarios(catalog, spec, config);
            const std::string text = report.to_json().dump(2) + "\n";
            if (sim_output.empty()) {
                std::cout << text << report.summary() << std::endl;
            } else {
                write_text_file(sim_output, "detection report",
                                [&](std::ostream& out) { out << text; });
                std::cout << report.summary() << std::endl;
            }
            return 0;
        }

        if (profile->parsed()) {
            const PipelineConfig config = build_config(profile_flags);
            const std::vector<Series> fleet =
                parse_telemetry_file(profile_input, parse_format(profile_format));
            const Series* series = nullptr;
            for (const Series& s : fleet) {
                if (s.series_id == profile_series) {
                    series = &s;
                    break;
                }
            }
            if (series == nullptr) {
                throw EmptyInput("series '" + profile_series + "' not found in input");
            }
            const SegmentationParams seg = config.segmentation();
            const MatrixProfile mp =
                matrix_profile(*series, seg.m, seg.effective_exclusion_radius());
            const CorrectedArcCurve cac =
                corrected_arc_curve(arc_curve(mp), seg.effective_edge_exclusion());

            auto emit = [&](std::ostream& out) {
                out << "position\tdistance\tindex\tcac\n";
                for (std::size_t i = 0; i < mp.size(); ++i) {
                    out << i << '\t' << mp.distances[i] << '\t' << mp.indices[i] << '\t'
                        << cac.values[i] << '\n';
                }
            };
            if (profile_output.empty()) {
                emit(std::cout);
            } else {
                write_text_file(profile_output, "profile dump", emit);
            }
            return 0;
        }

        if (graph_export->parsed()) {
            return do_run(graph_opts, build_config(graph_flags), true);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 2;
    }
    return 2;  // unreachable with require_subcommand(1)
}

int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return cli_main(args);
}

}  // namespace sentinel
