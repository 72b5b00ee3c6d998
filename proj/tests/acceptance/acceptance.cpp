// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "tsense/tsense.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace tsense;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

int failures = 0;

void run(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && elapsed > budget_s) {
        o.pass = false;
        o.detail += " [over time budget]";
    }
    if (!o.pass) {
        ++failures;
    }
    std::printf("%s  criterion %d: %s (%.3f s) %s\n", o.pass ? "PASS" : "FAIL", id, name, elapsed, o.detail.c_str());
    std::fflush(stdout);
}

simulate::ScenarioConfig solid_scenario(std::uint64_t seed) {
    simulate::ScenarioConfig cfg;
    cfg.duration = 60.0;
    cfg.seed = seed;
    simulate::SolidEvent s;
    s.time = 20.0;
    cfg.events.emplace_back(s);
    return cfg;
}

simulate::ScenarioConfig liquid_scenario(std::uint64_t seed, double concentration = 0.125, double duration = 60.0) {
    simulate::ScenarioConfig cfg;
    cfg.duration = duration;
    cfg.seed = seed;
    response::Injection inj;
    inj.concentration = concentration;
    inj.start_time = 20.0;
    cfg.events.emplace_back(simulate::LiquidEvent{inj});
    return cfg;
}

std::size_t count_action(const std::vector<pipeline::EventReport>& r, pipeline::Action a) {
    return static_cast<std::size_t>(
        std::count_if(r.begin(), r.end(), [a](const pipeline::EventReport& e) { return e.action == a; }));
}

Outcome debye_reduction() {
    const dielectric::WaterDebyeParams w = dielectric::water_defaults_25c;
    const dielectric::SalineDebyeParams s{w.eps_inf, w.eps_static, w.tau, 0.0};
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double f = 1e8 * std::pow(100.0, i / 199.0);
        const auto a = dielectric::debye_pure_water(f, w);
        const auto b = dielectric::debye_saline(f, s);
        worst = std::max({worst, rel(b.real_part, a.real_part), rel(b.loss_part, a.loss_part)});
    }
    std::ostringstream d;
    d << "max relative error " << worst;
    return {worst < 1e-12, d.str()};
}

Outcome microstrip_oracle() {
    bool ok = true;
    std::ostringstream d;
    const microstrip::MicrostripLine line(2.4e-3, 0.79e-3, 2.2);
    const double e_eff = rel(line.eps_eff(), 1.8696799449852968);
    const double e_z0 = rel(line.z0(), 50.760550761130301);
    ok = ok && e_eff < 1e-9 && e_z0 < 1e-9;
    d << "eps_eff err " << e_eff << ", z0 err " << e_z0;

    const double f = 700e6;
    const double beta = microstrip::phase_constant(f, line.eps_eff());
    const double lg = microstrip::guided_wavelength(beta);
    const auto zq = microstrip::open_stub_impedance(line.z0(), beta, lg / 4.0);
    const double zq_rel = zq.is_pole() ? INFINITY : std::abs(zq.value()) / line.z0();
    ok = ok && zq_rel < 1e-9;
    d << ", |Z(lg/4)|/Z0 " << zq_rel;

    // Feasible capacitances: stub electrical lengths spanning (0.01, pi/2 - 0.01) rad.
    const double omega = constants::two_pi * f;
    auto cap_at = [&](double bl) { return std::tan(bl) / (omega * line.z0()); };
    const double c_lo = cap_at(0.01);
    const double c_hi = cap_at(constants::pi / 2.0 - 0.01);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(std::log(c_lo), std::log(c_hi));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double c = std::exp(u(rng));
        const double l = microstrip::synthesize_stub_length(c, f, line);
        const double x = microstrip::open_stub_impedance(line.z0(), beta, l).reactance();
        worst = std::max(worst, rel(x, -1.0 / (omega * c)));
    }
    ok = ok && worst < 1e-8;
    d << ", synthesis round trip max err " << worst;
    return {ok, d.str()};
}

std::vector<response::VolumeShift> forward(double a, double b, double noise, std::mt19937_64* rng) {
    std::vector<response::VolumeShift> pts;
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i <= 20; ++i) {
        const double v = 25.0 * i;
        double y = a * (1.0 - std::exp(-b * v));
        if (rng != nullptr) {
            y *= 1.0 + noise * n(*rng);
        }
        pts.push_back({v, y});
    }
    return pts;
}

Outcome fit_recovery() {
    std::ostringstream d;
    const auto exact = response::fit_exponential(forward(2.0, 0.01, 0.0, nullptr));
    double worst_clean = std::max(rel(exact.a, 2.0), rel(exact.b, 0.01));

    std::mt19937_64 pick(99);
    std::uniform_real_distribution<double> ua(0.1, 10.0);
    std::uniform_real_distribution<double> ub(std::log(1e-3), std::log(1e-1));
    for (int i = 0; i < 100; ++i) {
        const double a = ua(pick);
        const double b = std::exp(ub(pick));
        const auto fit = response::fit_exponential(forward(a, b, 0.0, nullptr));
        worst_clean = std::max({worst_clean, rel(fit.a, a), rel(fit.b, b)});
    }

    int within = 0;
    double worst_noisy = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        std::mt19937_64 rng(seed);
        const auto fit = response::fit_exponential(forward(2.0, 0.01, 0.01, &rng));
        const double e = std::max(rel(fit.a, 2.0), rel(fit.b, 0.01));
        worst_noisy = std::max(worst_noisy, e);
        within += e < 0.05 ? 1 : 0;
    }
    d << "noiseless max err " << worst_clean << "; 1% noise: " << within << "/100 within 5%, worst " << worst_noisy;
    return {worst_clean < 1e-6 && within == 100, d.str()};
}

Outcome spectral_fidelity() {
    std::ostringstream d;
    const double dt = 0.110;
    const double fs = 1.0 / dt;
    const dsp::Band band{};
    std::vector<double> tone(128);
    for (std::size_t i = 0; i < tone.size(); ++i) {
        tone[i] = std::sin(constants::two_pi * 2.2 * dt * static_cast<double>(i));
    }
    const auto peak = dsp::band_peak(tone, fs, band);
    const double bin = fs / 128.0;
    const bool tone_ok = peak.magnitude >= 0.85 && peak.magnitude <= 1.15 && std::abs(peak.frequency - 2.2) <= bin;
    d << "2.2 Hz peak " << peak.magnitude << " at " << peak.frequency << " Hz";

    std::vector<double> low(2000);
    for (std::size_t i = 0; i < low.size(); ++i) {
        low[i] = std::sin(constants::two_pi * 0.2 * dt * static_cast<double>(i));
    }
    const auto filtered = dsp::BandpassFilter(band, fs).filtfilt(low);
    double in2 = 0.0;
    double out2 = 0.0;
    for (std::size_t i = 0; i < low.size(); ++i) {
        in2 += low[i] * low[i];
        out2 += filtered[i] * filtered[i];
    }
    const double atten_db = 10.0 * std::log10(out2 / in2);
    d << "; 0.2 Hz gain " << atten_db << " dB";
    return {tone_ok && atten_db <= -20.0, d.str()};
}

Outcome classification_separation() {
    const pipeline::PipelineConfig pc;
    double min_solid = INFINITY;
    double max_liquid = 0.0;
    int misclassified = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto st = simulate::simulate_scenario(solid_scenario(seed));
        min_solid = std::min(min_solid, pipeline::max_band_magnitude(st, pc));
        const auto sr = pipeline::run_pipeline(st, pc);
        misclassified += count_action(sr, pipeline::Action::Flush) == 1 ? 0 : 1;

        const auto lt = simulate::simulate_scenario(liquid_scenario(seed + 1000));
        max_liquid = std::max(max_liquid, pipeline::max_band_magnitude(lt, pc));
        const auto lr = pipeline::run_pipeline(lt, pc);
        misclassified += count_action(lr, pipeline::Action::Flush) == 0 ? 0 : 1;
    }
    std::ostringstream d;
    d << "min solid " << min_solid << " Hz/s, max liquid " << max_liquid << " Hz/s, threshold " << pc.solid_threshold
      << ", misclassified " << misclassified << "/100";
    return {min_solid > max_liquid && min_solid > pc.solid_threshold && max_liquid < pc.solid_threshold &&
                misclassified == 0,
            d.str()};
}

Outcome two_stage() {
    simulate::ScenarioConfig cfg;
    cfg.duration = 300.0;
    cfg.seed = 7;
    simulate::SolidEvent s;
    s.time = 10.0;
    cfg.events.emplace_back(s);
    response::Injection inj;
    inj.start_time = 30.0;
    cfg.events.emplace_back(simulate::LiquidEvent{inj});
    const pipeline::PipelineConfig pc;

    const auto trace = simulate::simulate_scenario(cfg);
    const auto reports = pipeline::run_pipeline(trace, pc);
    const auto again = pipeline::run_pipeline(simulate::simulate_scenario(cfg), pc);
    bool same = reports.size() == again.size();
    for (std::size_t i = 0; same && i < reports.size(); ++i) {
        same = reports[i].time == again[i].time && reports[i].action == again[i].action &&
               reports[i].band_peak_magnitude == again[i].band_peak_magnitude &&
               reports[i].estimated_concentration == again[i].estimated_concentration;
    }
    const bool sequence = reports.size() == 2 && reports[0].action == pipeline::Action::Flush &&
                          reports[1].action == pipeline::Action::Analyze &&
                          reports[1].estimated_concentration.has_value();

    const auto liquid = pipeline::run_pipeline(simulate::simulate_scenario(liquid_scenario(7, 0.125, 300.0)), pc);
    const bool no_flush = count_action(liquid, pipeline::Action::Flush) == 0 &&
                          count_action(liquid, pipeline::Action::Analyze) == 1;

    std::ostringstream d;
    d << "solid+liquid reports:";
    for (const auto& r : reports) {
        d << ' ' << pipeline::to_string(r.action) << "@" << r.time;
    }
    d << "; liquid-only FLUSH count " << count_action(liquid, pipeline::Action::Flush) << "; deterministic "
      << (same ? "yes" : "no");
    return {sequence && no_flush && same, d.str()};
}

Outcome concentration_estimation() {
    const pipeline::PipelineConfig pc;
    const auto ladder = response::default_concentration_ladder();
    std::ostringstream d;
    bool ok = true;

    const auto curve = response::model_calibration_curve();
    bool monotone = true;
    for (std::size_t i = 1; i < curve.points().size(); ++i) {
        monotone = monotone && curve.points()[i].shift > curve.points()[i - 1].shift;
    }
    ok = ok && monotone;
    d << "curve monotone " << (monotone ? "yes" : "no");

    double worst_clean = 0.0;
    int worst_noisy_hits = 20;
    for (double c_inj : ladder) {
        if (c_inj <= 0.0) {
            continue;
        }
        const double truth = response::mix_concentration({}, 220.0, c_inj).concentration;
        auto cfg = liquid_scenario(1, c_inj, 300.0);
        cfg.noise_sigma = 0.0;
        const auto clean = pipeline::estimate_concentration(simulate::simulate_scenario(cfg), pc);
        const double e = clean && clean->concentration ? rel(*clean->concentration, truth) : INFINITY;
        worst_clean = std::max(worst_clean, e);

        int hits = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto est = pipeline::estimate_concentration(
                simulate::simulate_scenario(liquid_scenario(seed * 31 + 5, c_inj, 300.0)), pc);
            hits += est && est->concentration && rel(*est->concentration, truth) <= 0.10 ? 1 : 0;
        }
        worst_noisy_hits = std::min(worst_noisy_hits, hits);
    }
    ok = ok && worst_clean <= 0.02 && worst_noisy_hits >= 18;
    d << "; noiseless worst err " << worst_clean << "; noisy worst ladder step " << worst_noisy_hits
      << "/20 within 10%";
    return {ok, d.str()};
}

Outcome performance() {
    simulate::ScenarioConfig cfg;
    cfg.duration = 600.0;
    cfg.seed = 3;
    simulate::SolidEvent s;
    s.time = 60.0;
    cfg.events.emplace_back(s);
    response::Injection inj;
    inj.start_time = 120.0;
    cfg.events.emplace_back(simulate::LiquidEvent{inj});

    const auto t0 = std::chrono::steady_clock::now();
    const auto trace = simulate::simulate_scenario(cfg);
    const auto t1 = std::chrono::steady_clock::now();
    const auto reports = pipeline::run_pipeline(trace, pipeline::PipelineConfig{});
    const auto t2 = std::chrono::steady_clock::now();
    const double sim_s = std::chrono::duration<double>(t1 - t0).count();
    const double ana_s = std::chrono::duration<double>(t2 - t1).count();
    std::ostringstream d;
    d << trace.size() << " samples; simulate " << sim_s << " s, analyze " << ana_s << " s, " << reports.size()
      << " reports";
    return {trace.size() == 5455 && sim_s < 1.0 && ana_s < 1.0, d.str()};
}

} // namespace

int main() {
    run(1, "Debye reduction", 1.0, debye_reduction);
    run(2, "microstrip oracle, quarter-wave stub, synthesis round trip", 1.0, microstrip_oracle);
    run(3, "exponential fit recovery", 5.0, fit_recovery);
    run(4, "spectral fidelity", 1.0, spectral_fidelity);
    run(5, "solid/liquid classification separation", 60.0, classification_separation);
    run(6, "two-stage algorithm", 0.0, two_stage);
    run(7, "concentration estimation across the ladder", 0.0, concentration_estimation);
    run(8, "performance on a 10-minute trace", 0.0, performance);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
