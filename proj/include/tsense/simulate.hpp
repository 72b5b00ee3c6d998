#pragma once

// Scripted basin scenarios rendered as resonance-frequency traces and S11 sweeps.

#include "tsense/constants.hpp"
#include "tsense/errors.hpp"
#include "tsense/response.hpp"
#include "tsense/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <type_traits>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

namespace tsense::simulate {

/// Ripple amplitude [Hz of resonance deviation] of a 50 g solid.
inline constexpr double default_solid_ripple_amplitude = 5000.0;
inline constexpr double reference_solid_mass = 50.0; ///< g

/// Water-surface ripple and dielectric step caused by a solid dropped into the basin.
struct SolidEvent {
    double time = 0.0;              ///< s
    double mass = reference_solid_mass; ///< g
    double ripple_frequency = 2.2;  ///< Hz
    double ripple_amplitude = default_solid_ripple_amplitude; ///< Hz, for a 50 g object
    double decay_time = 2.0;        ///< s
    double step_offset = 2000.0;    ///< Hz, for a 50 g object

    [[nodiscard]] double mass_scale() const { return mass / reference_solid_mass; }
};

/// Controlled injection of an ionic solution.
struct LiquidEvent {
    response::Injection injection;
};

using Event = std::variant<LiquidEvent, SolidEvent>;

inline double event_time(const Event& e) {
    return std::visit(
        [](const auto& ev) {
            if constexpr (std::is_same_v<std::decay_t<decltype(ev)>, SolidEvent>) {
                return ev.time;
            } else {
                return ev.injection.start_time;
            }
        },
        e);
}

struct ScenarioConfig {
    double duration = 60.0;              ///< s
    double sample_period = 0.110;        ///< s
    double baseline_frequency = 700e6;   ///< Hz, resonance with the initial basin contents
    double min_baseline_frequency = 670e6;
    double max_baseline_frequency = 730e6;
    response::BasinState basin{};
    double noise_sigma = 200.0;          ///< Hz
    std::vector<Event> events;
    std::uint64_t seed = 1;

    double mixing_time_constant = 3.0;   ///< s, first-order lag between mixture and observed shift
    double liquid_ripple_ratio = 0.15;   ///< liquid ripple amplitude relative to the 50 g solid default
    double liquid_ripple_frequency = 2.2; ///< Hz
    double ripple_band_low = 1.6;        ///< Hz, admissible solid ripple frequencies
    double ripple_band_high = 3.0;
    response::CalibrationCurve calibration = response::model_calibration_curve();

    [[nodiscard]] std::size_t sample_count() const {
        return static_cast<std::size_t>(std::floor(duration / sample_period + 1e-9)) + 1;
    }
};

inline void validate(const ScenarioConfig& cfg) {
    std::ostringstream err;
    if (!(cfg.duration >= 0.0)) {
        err << "duration must be non-negative; ";
    }
    if (!(cfg.sample_period > 0.0)) {
        err << "sample_period must be positive; ";
    }
    if (!(cfg.baseline_frequency >= cfg.min_baseline_frequency && cfg.baseline_frequency <= cfg.max_baseline_frequency)) {
        err << "baseline_frequency " << cfg.baseline_frequency << " Hz outside [" << cfg.min_baseline_frequency << ", "
            << cfg.max_baseline_frequency << "]; ";
    }
    if (!(cfg.noise_sigma >= 0.0)) {
        err << "noise_sigma must be non-negative; ";
    }
    if (!(cfg.mixing_time_constant > 0.0)) {
        err << "mixing_time_constant must be positive; ";
    }
    if (!(cfg.liquid_ripple_ratio >= 0.0)) {
        err << "liquid_ripple_ratio must be non-negative; ";
    }
    if (!(cfg.basin.volume > 0.0) || !(cfg.basin.concentration >= 0.0)) {
        err << "basin requires volume > 0 and concentration >= 0; ";
    }
    const double nyquist = 0.5 / cfg.sample_period;
    if (!(cfg.liquid_ripple_frequency > 0.0 && cfg.liquid_ripple_frequency < nyquist)) {
        err << "liquid_ripple_frequency must lie in (0, Nyquist); ";
    }
    double prev = -INFINITY;
    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
        const double t = event_time(cfg.events[i]);
        if (!(t >= 0.0)) {
            err << "event " << i << " has a negative time; ";
        }
        if (t < prev) {
            err << "event " << i << " is out of time order; ";
        }
        prev = t;
        if (const auto* s = std::get_if<SolidEvent>(&cfg.events[i])) {
            if (!(s->ripple_frequency >= cfg.ripple_band_low && s->ripple_frequency <= cfg.ripple_band_high)) {
                err << "event " << i << " ripple_frequency outside [" << cfg.ripple_band_low << ", "
                    << cfg.ripple_band_high << "] Hz; ";
            }
            if (!(s->ripple_frequency < nyquist)) {
                err << "event " << i << " ripple_frequency above Nyquist " << nyquist << " Hz; ";
            }
            if (!(s->ripple_amplitude > 0.0) || !(s->decay_time > 0.0) || !(s->mass > 0.0)) {
                err << "event " << i << " requires mass, ripple_amplitude and decay_time > 0; ";
            }
        } else {
            const auto& inj = std::get<LiquidEvent>(cfg.events[i]).injection;
            if (!(inj.concentration > 0.0) || !(inj.total_volume > 0.0) || !(inj.rate > 0.0)) {
                err << "event " << i << " injection requires positive concentration, volume and rate; ";
            }
        }
    }
    const std::string msg = err.str();
    if (!msg.empty()) {
        throw ConfigError("invalid scenario: " + msg.substr(0, msg.size() - 2));
    }
}

/// Damped sinusoid of the water surface after a solid enters; amplitude scales linearly with mass.
inline double ripple_burst(double t_since_event, const SolidEvent& ev) {
    if (!(t_since_event >= 0.0)) {
        throw DomainError("ripple time must be non-negative");
    }
    const double amplitude = ev.ripple_amplitude * ev.mass_scale();
    return amplitude * std::exp(-t_since_event / ev.decay_time) *
           std::sin(constants::two_pi * ev.ripple_frequency * t_since_event);
}

/// Basin contents after every injection has delivered its volume up to time t.
inline response::BasinState basin_at(const ScenarioConfig& cfg, double t) {
    double volume = cfg.basin.volume;
    double moles = cfg.basin.volume * cfg.basin.concentration;
    for (const auto& e : cfg.events) {
        if (const auto* liq = std::get_if<LiquidEvent>(&e)) {
            const auto& inj = liq->injection;
            const double added = std::clamp((t - inj.start_time) * inj.rate, 0.0, inj.total_volume);
            volume += added;
            moles += added * inj.concentration;
        }
    }
    return {volume, moles / volume};
}

/// Resonance trace of a scripted scenario. Deterministic in (cfg, cfg.seed).
inline FrequencyTrace simulate_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.sample_count();
    const double dt = cfg.sample_period;
    FrequencyTrace trace{0.0, dt, std::vector<double>(n, 0.0)};

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> phase_dist(0.0, constants::two_pi);

    std::vector<const SolidEvent*> solids;
    std::vector<std::pair<const response::Injection*, double>> liquids; // injection, ripple phase
    for (const auto& e : cfg.events) {
        if (const auto* s = std::get_if<SolidEvent>(&e)) {
            solids.push_back(s);
        } else {
            liquids.emplace_back(&std::get<LiquidEvent>(e).injection, phase_dist(rng));
        }
    }

    // Mixture-driven shift, first-order lag integrated with sub-steps.
    if (!liquids.empty()) {
        const double shift0 = response::steady_shift(cfg.basin.concentration, cfg.calibration);
        constexpr int substeps = 10;
        const double h = dt / substeps;
        const double decay = -std::expm1(-h / cfg.mixing_time_constant);
        double lagged = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) * dt;
            if (i > 0) {
                for (int k = 0; k < substeps; ++k) {
                    const double tm = t - dt + (k + 0.5) * h;
                    const double target =
                        response::steady_shift(basin_at(cfg, tm).concentration, cfg.calibration) - shift0;
                    lagged += (target - lagged) * decay;
                }
            }
            trace.samples[i] += lagged;
        }
        const double ripple_amp = cfg.liquid_ripple_ratio * default_solid_ripple_amplitude;
        for (const auto& [inj, phase] : liquids) {
            const double t_end = inj->start_time + inj->duration();
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) * dt;
                if (t >= inj->start_time && t < t_end) {
                    trace.samples[i] += ripple_amp *
                                        std::sin(constants::two_pi * cfg.liquid_ripple_frequency * (t - inj->start_time) + phase);
                }
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        double solid = 0.0;
        for (const auto* s : solids) {
            if (t >= s->time) {
                solid += s->step_offset * s->mass_scale() + ripple_burst(t - s->time, *s);
            }
        }
        trace.samples[i] += solid;
    }

    if (cfg.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (double& v : trace.samples) {
            v += noise(rng);
        }
    }
    for (double& v : trace.samples) {
        v += cfg.baseline_frequency;
    }
    return trace;
}

struct SweepSettings {
    double depth_db = 25.0;
    double q_factor = 30.0;
    double half_span = 20e6; ///< Hz around the baseline resonance
    std::size_t n_points = 401;
};

/// Lorentzian S11 dip in dB: -depth / (1 + (2 Q (f - f_r) / f_r)^2).
inline Sweep synth_sweep(double resonance, double depth_db, double q_factor, std::pair<double, double> span,
                         std::size_t n_points) {
    if (!(span.first < span.second) || !(resonance >= span.first && resonance <= span.second)) {
        throw ConfigError("sweep span must contain the resonance");
    }
    if (n_points < 16) {
        throw ConfigError("sweep needs at least 16 points");
    }
    if (!(q_factor > 0.0) || !(depth_db > 0.0)) {
        throw ConfigError("sweep requires q_factor > 0 and depth_db > 0");
    }
    Sweep s;
    s.frequencies.resize(n_points);
    s.s11_db.resize(n_points);
    const double step = (span.second - span.first) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double f = span.first + step * static_cast<double>(i);
        const double x = 2.0 * q_factor * (f - resonance) / resonance;
        s.frequencies[i] = f;
        s.s11_db[i] = -depth_db / (1.0 + x * x);
    }
    return s;
}

inline std::vector<Sweep> synth_sweeps(const FrequencyTrace& trace, double center, const SweepSettings& settings = {}) {
    std::vector<Sweep> out;
    out.reserve(trace.size());
    const std::pair<double, double> span{center - settings.half_span, center + settings.half_span};
    for (double f : trace.samples) {
        out.push_back(synth_sweep(f, settings.depth_db, settings.q_factor, span, settings.n_points));
    }
    return out;
}

} // namespace tsense::simulate
