// tsense: simulate scenarios, design stubs, build calibration curves and analyze traces.
//
// Exit codes: 0 success, 2 user or configuration error, 3 internal numeric failure.

#include "tsense/tsense.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tsense;
using io::Json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_user = 2;
constexpr int exit_numeric = 3;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("tsense");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("TS_LOG")) {
        const auto parsed = spdlog::level::from_str(level);
        // from_str maps unknown names to off; only "off" itself should silence.
        if (parsed != spdlog::level::off || std::string(level) == "off") {
            spdlog::set_level(parsed);
        } else {
            spdlog::warn("unknown TS_LOG level '{}', keeping 'warn'", level);
        }
    }
}

struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string output_dir;
    std::vector<std::string> arguments;
};

void write_manifest(const fs::path& path, const RunManifest& m) {
    Json j = Json::object();
    j["command"] = m.command;
    j["config_path"] = m.config_path;
    j["seed"] = m.seed;
    j["output_dir"] = m.output_dir;
    j["tool_version"] = tsense::version;
    j["arguments"] = m.arguments;
    auto out = io::open_out(path);
    out << j.dump(2) << '\n';
    spdlog::info("wrote manifest {}", path.string());
}

void prepare_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw ConfigError("cannot create output directory " + dir.string());
    }
}

// ---------------------------------------------------------------------------
// design
// ---------------------------------------------------------------------------

struct DesignArgs {
    double w = 0.0;
    double h = microstrip::rt5880.height;
    double eps_r = microstrip::rt5880.eps_r;
    double f = 700e6;
    std::optional<double> stub_c;
    bool json = false;
};

int cmd_design(const DesignArgs& a) {
    const microstrip::MicrostripLine line(a.w, a.h, a.eps_r);
    const double beta = microstrip::phase_constant(a.f, line.eps_eff());
    const double lambda_g = microstrip::guided_wavelength(beta);
    std::optional<double> stub;
    if (a.stub_c) {
        stub = microstrip::synthesize_stub_length(*a.stub_c, a.f, line);
    }
    if (a.json) {
        Json j = Json::object();
        j["w_m"] = a.w;
        j["h_m"] = a.h;
        j["eps_r"] = a.eps_r;
        j["f_hz"] = a.f;
        j["eps_eff"] = line.eps_eff();
        j["z0_ohm"] = line.z0();
        j["beta_rad_per_m"] = beta;
        j["lambda_g_m"] = lambda_g;
        j["stub_c_f"] = a.stub_c ? Json(*a.stub_c) : Json(nullptr);
        j["stub_length_m"] = stub ? Json(*stub) : Json(nullptr);
        std::cout << j.dump() << '\n';
        return exit_ok;
    }
    std::cout << "eps_eff        " << io::format_number(line.eps_eff()) << '\n'
              << "z0_ohm         " << io::format_number(line.z0()) << '\n'
              << "beta_rad_per_m " << io::format_number(beta) << '\n'
              << "lambda_g_m     " << io::format_number(lambda_g) << '\n';
    if (stub) {
        std::cout << "stub_length_m  " << io::format_number(*stub) << '\n';
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool emit_sweeps = false;
};

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& argv) {
    auto file = io::read_scenario(a.config);
    if (a.seed) {
        file.scenario.seed = *a.seed;
    }
    const fs::path out(a.out);
    prepare_output_dir(out);
    write_manifest(out / "manifest.json", {"simulate", a.config, file.scenario.seed, a.out, argv});

    const auto trace = simulate::simulate_scenario(file.scenario);
    io::write_trace(out / "trace.csv", trace);
    spdlog::info("wrote {} samples to {}", trace.size(), (out / "trace.csv").string());
    if (a.emit_sweeps) {
        const auto sweeps = simulate::synth_sweeps(trace, file.scenario.baseline_frequency, file.sweep);
        io::write_sweep_directory(out / "sweeps", sweeps);
        spdlog::info("wrote {} sweeps to {}", sweeps.size(), (out / "sweeps").string());
    }
    std::cout << "simulated " << trace.size() << " samples (" << io::format_number(file.scenario.duration)
              << " s) -> " << (out / "trace.csv").string() << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string in;
    std::string calibration;
    std::string out;
    bool dump_stages = false;
    double sweep_period = 0.110;
    double sweep_start = 0.0;
};

FrequencyTrace load_input(const AnalyzeArgs& a) {
    const fs::path in(a.in);
    if (fs::is_directory(in)) {
        const auto files = io::list_sweep_files(in);
        FrequencyTrace t{a.sweep_start, a.sweep_period, {}};
        t.samples.reserve(files.size());
        for (const auto& f : files) {
            t.samples.push_back(dsp::extract_resonance(io::read_sweep(f)));
        }
        spdlog::info("extracted {} resonances from {}", t.size(), in.string());
        return t;
    }
    return io::to_uniform_trace(io::read_trace_samples(in));
}

void dump_stages(const fs::path& dir, const FrequencyTrace& trace, const std::vector<pipeline::StageSample>& stages,
                 const pipeline::PipelineConfig& cfg) {
    fs::create_directories(dir);
    auto shift = io::open_out(dir / "shift.csv");
    auto derivative = io::open_out(dir / "derivative.csv");
    auto magnitude = io::open_out(dir / "band_magnitude.csv");
    shift << "time_s,shift_hz\n";
    derivative << "time_s,derivative_hz_per_s\n";
    magnitude << "time_s,band_peak_hz_per_s\n";
    for (const auto& s : stages) {
        shift << io::format_number(s.time) << ',' << io::format_number(s.shift) << '\n';
        derivative << io::format_number(s.time) << ',' << io::format_number(s.derivative) << '\n';
        if (s.band_magnitude) {
            magnitude << io::format_number(s.time) << ',' << io::format_number(*s.band_magnitude) << '\n';
        }
    }
    auto filtered = io::open_out(dir / "filtered.csv");
    filtered << "time_s,filtered_hz_per_s\n";
    if (trace.size() >= 2) {
        const auto f = dsp::bandpass(dsp::differentiate(trace), cfg.band);
        for (std::size_t i = 0; i < f.size(); ++i) {
            filtered << io::format_number(f.time_at(i)) << ',' << io::format_number(f.samples[i]) << '\n';
        }
    }
}

int cmd_analyze(const AnalyzeArgs& a, const std::vector<std::string>& argv) {
    pipeline::PipelineConfig cfg;
    if (!a.calibration.empty()) {
        cfg.calibration = io::read_calibration(fs::path(a.calibration));
    }
    const auto trace = load_input(a);
    cfg.sample_period = trace.sample_period;

    const fs::path out(a.out);
    prepare_output_dir(out);
    write_manifest(out / "manifest.json", {"analyze", a.calibration, 0, a.out, argv});

    pipeline::Pipeline p(cfg);
    std::vector<pipeline::StageSample> stages;
    if (a.dump_stages) {
        stages.reserve(trace.size());
        p.set_stage_observer([&stages](const pipeline::StageSample& s) { stages.push_back(s); });
    }
    std::vector<pipeline::EventReport> reports;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        auto r = p.push(trace.time_at(i), trace.samples[i]);
        reports.insert(reports.end(), r.begin(), r.end());
    }
    auto tail = p.finish();
    reports.insert(reports.end(), tail.begin(), tail.end());

    {
        auto events = io::open_out(out / "events.ndjson");
        io::write_reports(events, reports);
    }
    if (a.dump_stages) {
        dump_stages(out / "stages", trace, stages, cfg);
    }

    std::size_t flushes = 0;
    std::size_t analyses = 0;
    for (const auto& r : reports) {
        flushes += r.action == pipeline::Action::Flush ? 1 : 0;
        analyses += r.action == pipeline::Action::Analyze ? 1 : 0;
        if (!r.diagnostic.empty()) {
            spdlog::warn("t = {} s: {}", r.time, r.diagnostic);
        } else if (r.out_of_span) {
            spdlog::warn("t = {} s: steady shift outside the calibration span", r.time);
        }
    }
    std::cout << "analyzed " << trace.size() << " samples: " << reports.size() << " reports, " << flushes
              << " FLUSH, " << analyses << " ANALYZE, max band peak "
              << io::format_number(p.max_band_magnitude()) << " Hz/s\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::string grid = "default";
    std::string out;
    std::string dielectric_config;
    double filling_factor = 0.25;
    double temperature = dielectric::reference_temperature_c;
    double frequency = 700e6;
};

/// `default`, or comma-separated items: a number, or `geom:<start>:<stop>:<ratio>`.
std::vector<double> parse_grid(const std::string& spec) {
    if (spec == "default") {
        return response::default_concentration_ladder();
    }
    std::vector<double> grid;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.rfind("geom:", 0) == 0) {
            std::vector<double> p;
            std::stringstream parts(item.substr(5));
            std::string part;
            while (std::getline(parts, part, ':')) {
                p.push_back(io::parse_number(part, "grid"));
            }
            if (p.size() != 3 || !(p[0] > 0.0) || !(p[1] >= p[0]) || !(p[2] > 1.0)) {
                throw ConfigError("grid item '" + item + "' must be geom:<start>:<stop>:<ratio> with 0 < start <= stop and ratio > 1");
            }
            for (double c = p[0]; c <= p[1] * (1.0 + 1e-12); c *= p[2]) {
                grid.push_back(c);
            }
        } else {
            try {
                grid.push_back(io::parse_number(item, "grid"));
            } catch (const IngestError& e) {
                throw ConfigError(e.what());
            }
        }
    }
    if (grid.size() < 2) {
        throw ConfigError("calibration grid needs at least two concentrations");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ConfigError("calibration grid must be strictly increasing");
        }
    }
    return grid;
}

int cmd_calibrate(const CalibrateArgs& a, const std::vector<std::string>& argv) {
    const auto grid = parse_grid(a.grid);
    response::ResonatorModel model;
    model.filling_factor = a.filling_factor;
    model.temperature_c = a.temperature;
    model.reference_frequency = a.frequency;
    if (!a.dielectric_config.empty()) {
        model.salinity = io::read_dielectric_config(a.dielectric_config).salinity;
    }
    response::CalibrationCurve curve;
    try {
        curve = response::model_calibration_curve(grid, model);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    } catch (const RangeError& e) {
        throw ConfigError(e.what());
    }
    const fs::path out(a.out);
    if (out.has_parent_path()) {
        prepare_output_dir(out.parent_path());
    }
    write_manifest(fs::path(a.out + ".manifest.json"),
                   {"calibrate", a.dielectric_config, 0, out.parent_path().string(), argv});
    io::write_calibration(out, curve);
    std::cout << "wrote " << curve.points().size() << " calibration points -> " << out.string() << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    const std::vector<std::string> args(argv + 1, argv + argc);

    CLI::App app{"Time-transient RF water sensor toolkit"};
    // --h is the substrate height, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", std::string(tsense::version));
    app.require_subcommand(1);

    DesignArgs design;
    auto* d = app.add_subcommand("design", "Microstrip line and open-stub design figures");
    d->add_option("--w", design.w, "trace width [m]")->required();
    d->add_option("--h", design.h, "substrate height [m]")->capture_default_str();
    d->add_option("--eps-r", design.eps_r, "substrate relative permittivity")->capture_default_str();
    d->add_option("--f", design.f, "frequency [Hz]")->capture_default_str();
    d->add_option("--stub-c", design.stub_c, "target stub capacitance [F]");
    d->add_flag("--json", design.json, "print JSON instead of text");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Render a scenario to a resonance trace");
    s->add_option("--config", sim.config, "scenario JSON")->required()->check(CLI::ExistingFile);
    s->add_option("--seed", sim.seed, "noise seed (overrides the scenario)");
    s->add_option("--out", sim.out, "output directory")->required();
    s->add_flag("--emit-sweeps", sim.emit_sweeps, "also write one S11 sweep CSV per sample");

    AnalyzeArgs ana;
    auto* an = app.add_subcommand("analyze", "Run the two-stage detector over a trace or sweep directory");
    an->add_option("--in", ana.in, "trace CSV or sweep directory")->required()->check(CLI::ExistingPath);
    an->add_option("--calibration", ana.calibration, "calibration CSV (default: model-derived curve)")
        ->check(CLI::ExistingFile);
    an->add_option("--out", ana.out, "output directory")->required();
    an->add_flag("--dump-stages", ana.dump_stages, "write intermediate stage CSVs");
    an->add_option("--dt", ana.sweep_period, "sweep directory sample period [s]")->capture_default_str();
    an->add_option("--t0", ana.sweep_start, "sweep directory start time [s]")->capture_default_str();

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Build the model-derived concentration-to-shift curve");
    c->add_option("--grid", cal.grid, "'default' or comma list of concentrations / geom:<start>:<stop>:<ratio>")
        ->capture_default_str();
    c->add_option("--out", cal.out, "calibration CSV to write")->required();
    c->add_option("--dielectric-config", cal.dielectric_config, "key = value dielectric constants file")
        ->check(CLI::ExistingFile);
    c->add_option("--filling-factor", cal.filling_factor, "fraction of resonator field in the water")
        ->capture_default_str();
    c->add_option("--temperature", cal.temperature, "water temperature [degC]")->capture_default_str();
    c->add_option("--f", cal.frequency, "resonator reference frequency [Hz]")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_user;
    }

    try {
        if (d->parsed()) {
            return cmd_design(design);
        }
        if (s->parsed()) {
            return cmd_simulate(sim, args);
        }
        if (an->parsed()) {
            return cmd_analyze(ana, args);
        }
        if (c->parsed()) {
            return cmd_calibrate(cal, args);
        }
    } catch (const FitError& e) {
        spdlog::error("{}", e.what());
        return exit_numeric;
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return exit_user;
    } catch (const ValidityError& e) {
        spdlog::error("{}", e.what());
        return exit_user;
    } catch (const SynthesisError& e) {
        spdlog::error("{}", e.what());
        return exit_user;
    } catch (const IngestError& e) {
        spdlog::error("{}", e.what());
        return exit_user;
    } catch (const DomainError& e) {
        spdlog::error("{}", e.what());
        return exit_user;
    } catch (const RangeError& e) {
        spdlog::error("{}", e.what());
        return exit_user;
    } catch (const std::exception& e) {
        spdlog::error("internal failure: {}", e.what());
        return exit_numeric;
    }
    return exit_user;
}
