#pragma once

// File formats: trace / calibration / sweep CSVs, scenario JSON, dielectric
// key-value configs and newline-delimited JSON event reports.
//
// Numbers are written with the shortest decimal that round-trips, so a
// write -> read -> write cycle is byte-identical.

#include "tsense/dielectric.hpp"
#include "tsense/errors.hpp"
#include "tsense/pipeline.hpp"
#include "tsense/response.hpp"
#include "tsense/simulate.hpp"
#include "tsense/trace.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace tsense::io {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline constexpr std::string_view trace_header = "time_s,frequency_hz";
inline constexpr std::string_view calibration_header = "concentration_mol_per_l,shift_hz";
inline constexpr std::string_view sweep_header = "frequency_hz,s11_db";
inline constexpr std::string_view saline_table_header = "concentration_mol_per_l,eps_static,tau_s,conductivity_s_per_m";

/// Shortest round-trip decimal representation.
inline std::string format_number(double v) {
    char buf[512];
    // Plain decimals for the magnitudes found in traces; shortest round-trip either way.
    if (v == 0.0) {
        v = 0.0; // no "-0"
    }
    const double m = std::abs(v);
    const bool fixed = m == 0.0 || (m >= 1e-5 && m < 1e15);
    const auto res = fixed ? std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed)
                           : std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

inline double parse_number(std::string_view s, std::string_view context) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw IngestError("cannot parse number '" + std::string(s) + "' in " + std::string(context));
    }
    return v;
}

/// Rows of a numeric CSV with a fixed header.
inline std::vector<std::vector<double>> parse_csv(std::istream& in, std::string_view header, std::string_view name) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IngestError(std::string(name) + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != header) {
        throw IngestError(std::string(name) + ": expected header '" + std::string(header) + "', got '" + line + "'");
    }
    const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            const std::string context = std::string(name) + " line " + std::to_string(line_no);
            row.push_back(parse_number(rest.substr(0, comma), context));
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (row.size() != columns) {
            throw IngestError(std::string(name) + " line " + std::to_string(line_no) + ": expected " +
                              std::to_string(columns) + " columns");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p);
    if (!in) {
        throw IngestError("cannot open " + p.string());
    }
    return in;
}

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + p.string());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// Timestamped samples as read from a trace file.
struct TimedSamples {
    std::vector<double> times;
    std::vector<double> frequencies;
};

inline TimedSamples read_trace_samples(std::istream& in) {
    TimedSamples s;
    for (const auto& row : parse_csv(in, trace_header, "trace")) {
        s.times.push_back(row[0]);
        s.frequencies.push_back(row[1]);
    }
    return s;
}

inline TimedSamples read_trace_samples(const fs::path& p) {
    auto in = open_in(p);
    return read_trace_samples(in);
}

/// Uniform trace from timestamped samples; jitter beyond `tolerance` of the period is an error.
inline FrequencyTrace to_uniform_trace(const TimedSamples& s, double tolerance = 0.01) {
    if (s.times.size() < 2) {
        throw IngestError("trace needs at least two samples");
    }
    const double dt = (s.times.back() - s.times.front()) / static_cast<double>(s.times.size() - 1);
    if (!(dt > 0.0)) {
        throw IngestError("trace timestamps must increase");
    }
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double expected = s.times.front() + static_cast<double>(i) * dt;
        if (std::abs(s.times[i] - expected) > tolerance * dt) {
            std::ostringstream msg;
            msg << "non-uniform sampling at row " << i + 1 << ": t = " << s.times[i] << " s, expected " << expected
                << " s";
            throw IngestError(msg.str());
        }
    }
    return {s.times.front(), dt, s.frequencies};
}

inline void write_trace(std::ostream& out, const FrequencyTrace& t) {
    out << trace_header << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << format_number(t.time_at(i)) << ',' << format_number(t.samples[i]) << '\n';
    }
}

inline void write_trace(const fs::path& p, const FrequencyTrace& t) {
    auto out = open_out(p);
    write_trace(out, t);
}

// ---------------------------------------------------------------------------
// Calibration curves
// ---------------------------------------------------------------------------

inline response::CalibrationCurve read_calibration(std::istream& in) {
    std::vector<response::CalibrationPoint> pts;
    for (const auto& row : parse_csv(in, calibration_header, "calibration")) {
        pts.push_back({row[0], row[1]});
    }
    return response::CalibrationCurve(std::move(pts));
}

inline response::CalibrationCurve read_calibration(const fs::path& p) {
    auto in = open_in(p);
    return read_calibration(in);
}

inline void write_calibration(std::ostream& out, const response::CalibrationCurve& c) {
    out << calibration_header << '\n';
    for (const auto& p : c.points()) {
        out << format_number(p.concentration) << ',' << format_number(p.shift) << '\n';
    }
}

inline void write_calibration(const fs::path& p, const response::CalibrationCurve& c) {
    auto out = open_out(p);
    write_calibration(out, c);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline Sweep read_sweep(std::istream& in, std::string_view name = "sweep") {
    Sweep s;
    for (const auto& row : parse_csv(in, sweep_header, name)) {
        s.frequencies.push_back(row[0]);
        s.s11_db.push_back(row[1]);
    }
    validate(s);
    return s;
}

inline Sweep read_sweep(const fs::path& p) {
    auto in = open_in(p);
    return read_sweep(in, p.filename().string());
}

inline void write_sweep(std::ostream& out, const Sweep& s) {
    out << sweep_header << '\n';
    for (std::size_t i = 0; i < s.frequencies.size(); ++i) {
        out << format_number(s.frequencies[i]) << ',' << format_number(s.s11_db[i]) << '\n';
    }
}

inline std::string sweep_file_name(std::size_t index) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << index << ".csv";
    return name.str();
}

inline void write_sweep_directory(const fs::path& dir, const std::vector<Sweep>& sweeps) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < sweeps.size(); ++i) {
        auto out = open_out(dir / sweep_file_name(i));
        write_sweep(out, sweeps[i]);
    }
}

/// CSV files of a sweep directory in lexicographic (= time) order.
inline std::vector<fs::path> list_sweep_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files.empty()) {
        throw IngestError("sweep directory " + dir.string() + " contains no CSV files");
    }
    return files;
}

// ---------------------------------------------------------------------------
// Dielectric constants config (key = value)
// ---------------------------------------------------------------------------

struct DielectricConfig {
    dielectric::WaterDebyeParams water = dielectric::water_defaults_25c;
    dielectric::SalineModel salinity = dielectric::StogrynModel{};
};

inline dielectric::TableModel read_saline_table(const fs::path& p, double eps_inf) {
    auto in = open_in(p);
    std::vector<dielectric::SalineTableRow> rows;
    for (const auto& r : parse_csv(in, saline_table_header, p.filename().string())) {
        rows.push_back({r[0], r[1], r[2], r[3]});
    }
    return dielectric::TableModel(std::move(rows), eps_inf);
}

/// Parse `key = value` lines; `#` starts a comment. Relative table paths resolve
/// against `base_dir`.
inline DielectricConfig parse_dielectric_config(std::istream& in, const fs::path& base_dir = {}) {
    DielectricConfig cfg;
    std::string model = "stogryn1971";
    std::string table_path;
    std::string line;
    std::vector<std::string> bad;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bad.push_back(line);
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "water.eps_static") {
                cfg.water.eps_static = parse_number(value, key);
            } else if (key == "water.eps_inf") {
                cfg.water.eps_inf = parse_number(value, key);
            } else if (key == "water.tau_s") {
                cfg.water.tau = parse_number(value, key);
            } else if (key == "saline.model") {
                model = value;
            } else if (key == "saline.table_path") {
                table_path = value;
            } else {
                bad.push_back(key);
            }
        } catch (const IngestError&) {
            bad.push_back(key);
        }
    }
    if (!bad.empty()) {
        std::string msg = "invalid dielectric config keys:";
        for (const auto& k : bad) {
            msg += " " + k;
        }
        throw ConfigError(msg);
    }
    try {
        dielectric::validate(cfg.water);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (model == "stogryn1971") {
        cfg.salinity = dielectric::StogrynModel{cfg.water};
    } else if (model == "table") {
        if (table_path.empty()) {
            throw ConfigError("saline.model = table requires saline.table_path");
        }
        fs::path p(table_path);
        if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
        }
        cfg.salinity = read_saline_table(p, cfg.water.eps_inf);
    } else {
        throw ConfigError("saline.model must be stogryn1971 or table, got '" + model + "'");
    }
    return cfg;
}

inline DielectricConfig read_dielectric_config(const fs::path& p) {
    auto in = open_in(p);
    return parse_dielectric_config(in, p.parent_path());
}

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------
//
// {
//   "duration_s": 120, "sample_period_s": 0.11, "baseline_frequency_hz": 7e8,
//   "noise_sigma_hz": 200, "seed": 7,
//   "basin": {"volume_ml": 4000, "concentration_mol_per_l": 0},
//   "mixing_time_constant_s": 3, "liquid_ripple_ratio": 0.15, "liquid_ripple_frequency_hz": 2.2,
//   "calibration_path": "cal.csv",
//   "sweep": {"depth_db": 25, "q_factor": 30, "half_span_hz": 2e7, "n_points": 401},
//   "events": [
//     {"type": "solid", "time_s": 10, "mass_g": 50, "ripple_frequency_hz": 2.2,
//      "ripple_amplitude_hz": 5000, "decay_time_s": 2, "step_offset_hz": 2000},
//     {"type": "liquid", "start_time_s": 30, "concentration_mol_per_l": 0.125,
//      "total_volume_ml": 220, "rate_ml_per_s": 17}
//   ]
// }

struct ScenarioFile {
    simulate::ScenarioConfig scenario;
    simulate::SweepSettings sweep;
};

namespace detail {

class KeyReader {
public:
    KeyReader(const Json& obj, std::string prefix, std::vector<std::string>& errors)
        : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
        if (!obj_.is_object()) {
            errors_.push_back(prefix_.empty() ? "<root>" : prefix_.substr(0, prefix_.size() - 1));
        }
    }

    void number(const char* key, double& dst) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) {
            return;
        }
        const auto& v = obj_.at(key);
        if (!v.is_number()) {
            errors_.push_back(prefix_ + key);
            return;
        }
        dst = v.get<double>();
    }

    template <typename Int>
    void integer(const char* key, Int& dst) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) {
            return;
        }
        const auto& v = obj_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
            errors_.push_back(prefix_ + key);
            return;
        }
        dst = v.get<Int>();
    }

    void string(const char* key, std::string& dst) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) {
            return;
        }
        const auto& v = obj_.at(key);
        if (!v.is_string()) {
            errors_.push_back(prefix_ + key);
            return;
        }
        dst = v.get<std::string>();
    }

    const Json* child(const char* key) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) {
            return nullptr;
        }
        return &obj_.at(key);
    }

    void require(const char* key) {
        if (obj_.is_object() && !obj_.contains(key)) {
            errors_.push_back(prefix_ + key + " (missing)");
        }
    }

    void reject_unknown() {
        if (!obj_.is_object()) {
            return;
        }
        for (const auto& [k, _] : obj_.items()) {
            if (!seen_.contains(k)) {
                errors_.push_back(prefix_ + k + " (unknown)");
            }
        }
    }

private:
    const Json& obj_;
    std::string prefix_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

} // namespace detail

/// Parse a scenario document; every schema violation is collected into one ConfigError.
inline ScenarioFile parse_scenario(const Json& doc, const fs::path& base_dir = {}) {
    ScenarioFile out;
    auto& sc = out.scenario;
    std::vector<std::string> errors;
    detail::KeyReader root(doc, "", errors);
    root.number("duration_s", sc.duration);
    root.number("sample_period_s", sc.sample_period);
    root.number("baseline_frequency_hz", sc.baseline_frequency);
    root.number("min_baseline_frequency_hz", sc.min_baseline_frequency);
    root.number("max_baseline_frequency_hz", sc.max_baseline_frequency);
    root.number("noise_sigma_hz", sc.noise_sigma);
    root.integer("seed", sc.seed);
    root.number("mixing_time_constant_s", sc.mixing_time_constant);
    root.number("liquid_ripple_ratio", sc.liquid_ripple_ratio);
    root.number("liquid_ripple_frequency_hz", sc.liquid_ripple_frequency);
    root.number("ripple_band_low_hz", sc.ripple_band_low);
    root.number("ripple_band_high_hz", sc.ripple_band_high);
    root.require("duration_s");
    std::string calibration_path;
    root.string("calibration_path", calibration_path);

    if (const Json* basin = root.child("basin")) {
        detail::KeyReader r(*basin, "basin.", errors);
        r.number("volume_ml", sc.basin.volume);
        r.number("concentration_mol_per_l", sc.basin.concentration);
        r.reject_unknown();
    }
    if (const Json* sweep = root.child("sweep")) {
        detail::KeyReader r(*sweep, "sweep.", errors);
        r.number("depth_db", out.sweep.depth_db);
        r.number("q_factor", out.sweep.q_factor);
        r.number("half_span_hz", out.sweep.half_span);
        r.integer("n_points", out.sweep.n_points);
        r.reject_unknown();
    }
    if (const Json* events = root.child("events")) {
        if (!events->is_array()) {
            errors.emplace_back("events");
        } else {
            for (std::size_t i = 0; i < events->size(); ++i) {
                const Json& ev = (*events)[i];
                const std::string prefix = "events[" + std::to_string(i) + "].";
                detail::KeyReader r(ev, prefix, errors);
                std::string type;
                r.string("type", type);
                if (type == "solid") {
                    simulate::SolidEvent s;
                    r.require("time_s");
                    r.number("time_s", s.time);
                    r.number("mass_g", s.mass);
                    r.number("ripple_frequency_hz", s.ripple_frequency);
                    r.number("ripple_amplitude_hz", s.ripple_amplitude);
                    r.number("decay_time_s", s.decay_time);
                    r.number("step_offset_hz", s.step_offset);
                    sc.events.emplace_back(s);
                } else if (type == "liquid") {
                    simulate::LiquidEvent l;
                    r.require("start_time_s");
                    r.number("start_time_s", l.injection.start_time);
                    r.number("concentration_mol_per_l", l.injection.concentration);
                    r.number("total_volume_ml", l.injection.total_volume);
                    r.number("rate_ml_per_s", l.injection.rate);
                    sc.events.emplace_back(l);
                } else {
                    errors.push_back(prefix + "type");
                }
                r.reject_unknown();
            }
        }
    }
    root.reject_unknown();

    if (!errors.empty()) {
        std::string msg = "scenario schema violations:";
        for (const auto& e : errors) {
            msg += " " + e;
        }
        throw ConfigError(msg);
    }
    if (!calibration_path.empty()) {
        fs::path p(calibration_path);
        if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
        }
        sc.calibration = read_calibration(p);
    }
    simulate::validate(sc);
    return out;
}

inline ScenarioFile read_scenario(const fs::path& p) {
    auto in = open_in(p);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("scenario " + p.string() + " is not valid JSON: " + e.what());
    }
    return parse_scenario(doc, p.parent_path());
}

// ---------------------------------------------------------------------------
// Event reports
// ---------------------------------------------------------------------------

inline Json to_json(const pipeline::EventReport& r) {
    Json j = Json::object();
    j["time_s"] = r.time;
    j["class"] = std::string(pipeline::to_string(r.event_class));
    j["band_peak_hz_per_s"] = r.band_peak_magnitude;
    j["est_concentration_mol_per_l"] = r.estimated_concentration ? Json(*r.estimated_concentration) : Json(nullptr);
    j["action"] = std::string(pipeline::to_string(r.action));
    return j;
}

/// One report per line, fields in the documented order.
inline std::string to_ndjson_line(const pipeline::EventReport& r) {
    std::string s = "{\"time_s\":" + format_number(r.time);
    s += ",\"class\":\"" + std::string(pipeline::to_string(r.event_class)) + "\"";
    s += ",\"band_peak_hz_per_s\":" + format_number(r.band_peak_magnitude);
    s += ",\"est_concentration_mol_per_l\":" +
         (r.estimated_concentration ? format_number(*r.estimated_concentration) : std::string("null"));
    s += ",\"action\":\"" + std::string(pipeline::to_string(r.action)) + "\"}";
    return s;
}

inline void write_reports(std::ostream& out, const std::vector<pipeline::EventReport>& reports) {
    for (const auto& r : reports) {
        out << to_ndjson_line(r) << '\n';
    }
}

} // namespace tsense::io
