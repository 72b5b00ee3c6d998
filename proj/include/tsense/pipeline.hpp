#pragma once

// Two-stage sensing: a spectral scan of the resonance derivative flags solid
// insertions (and requests a flush); when no solid is present, a sustained
// resonance shift is fitted with the exponential transient model and mapped to
// a mixture concentration through the calibration curve.

#include "tsense/dsp.hpp"
#include "tsense/errors.hpp"
#include "tsense/exp_fit.hpp"
#include "tsense/response.hpp"
#include "tsense/trace.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tsense::pipeline {

enum class EventClass { Solid, Liquid, None };
enum class Action { Flush, Analyze, Idle };

inline std::string_view to_string(EventClass c) {
    switch (c) {
    case EventClass::Solid: return "SOLID";
    case EventClass::Liquid: return "LIQUID";
    case EventClass::None: return "NONE";
    }
    return "NONE";
}

inline std::string_view to_string(Action a) {
    switch (a) {
    case Action::Flush: return "FLUSH";
    case Action::Analyze: return "ANALYZE";
    case Action::Idle: return "IDLE";
    }
    return "IDLE";
}

struct PipelineConfig {
    dsp::Band band{1.6, 3.0};
    double sample_period = 0.110;      ///< s
    std::size_t window_length = 128;   ///< samples
    std::size_t hop = 16;              ///< samples
    double solid_threshold = 12500.0;  ///< Hz/s, absolute floor on the band magnitude
    double noise_multiplier = 5.0;     ///< k in max(solid_threshold, k * noise_floor)
    double baseline_window = 30.0;     ///< s, span of the rolling noise-floor median
    double settle_time = 5.0;          ///< s, detection lockout after a flush
    std::size_t baseline_samples = 16; ///< samples averaged into f0 after (re)arming
    double onset_sigma = 3.0;          ///< shift start: first |shift| above this many sigma
    double significance_sigma = 5.0;   ///< liquid trigger: |shift| above this many sigma
    std::size_t confirm_samples = 3;   ///< consecutive significant samples to trigger
    double sigma_floor = 1.0;          ///< Hz, lower bound on the noise estimate
    double plateau_block = 3.0;        ///< s, block length for the settling test
    double plateau_relative = 0.002;   ///< relative block-to-block change counted as settled
    double plateau_hold = 6.0;         ///< s the settling test must hold
    double min_analysis_time = 180.0;  ///< s after onset before a liquid report
    double max_analysis_time = 300.0;  ///< s, bound on the analysis buffer
    double jitter_tolerance = 0.01;    ///< fraction of the sample period
    double injection_rate_assumed = 17.0; ///< mL/s
    response::CalibrationCurve calibration = response::model_calibration_curve();
};

inline void validate(const PipelineConfig& cfg) {
    if (!(cfg.sample_period > 0.0)) {
        throw ConfigError("pipeline sample_period must be positive");
    }
    dsp::validate(cfg.band, 1.0 / cfg.sample_period);
    if (cfg.window_length < 32) {
        throw ConfigError("pipeline window_length must be at least 32 samples");
    }
    if (cfg.hop < 1) {
        throw ConfigError("pipeline hop must be at least 1 sample");
    }
    if (!(cfg.injection_rate_assumed > 0.0)) {
        throw ConfigError("injection_rate_assumed must be positive");
    }
    if (cfg.baseline_samples < 2 || cfg.confirm_samples < 1) {
        throw ConfigError("baseline_samples must be >= 2 and confirm_samples >= 1");
    }
}

struct EventReport {
    double time = 0.0; ///< s
    EventClass event_class = EventClass::None;
    double band_peak_magnitude = 0.0; ///< Hz/s
    std::optional<double> estimated_concentration; ///< mol/L, LIQUID only
    std::optional<response::ExpFit> fit;           ///< LIQUID only
    bool out_of_span = false;                      ///< LIQUID shift beyond the calibration curve
    std::string diagnostic;                        ///< why no concentration could be estimated
    Action action = Action::Idle;
};

/// Classification of a single spectral window.
enum class WindowDecision { Solid, NoneSoFar };

inline WindowDecision classify_window(double magnitude, const PipelineConfig& cfg, double noise_floor) {
    const double threshold = std::max(cfg.solid_threshold, cfg.noise_multiplier * noise_floor);
    return magnitude > threshold ? WindowDecision::Solid : WindowDecision::NoneSoFar;
}

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) {
        return 0.0;
    }
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

/// Robust white-noise sigma from first differences (MAD / 0.6745 / sqrt 2).
inline double noise_sigma_from_differences(std::span<const double> x) {
    if (x.size() < 3) {
        return 0.0;
    }
    std::vector<double> d(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        d[i] = x[i + 1] - x[i];
    }
    const double m = median(d);
    for (double& v : d) {
        v = std::abs(v - m);
    }
    return median(d) / 0.6744897501960817 / std::sqrt(2.0);
}

} // namespace detail

struct ConcentrationEstimate {
    response::ExpFit fit;
    double onset_time = 0.0;     ///< s
    double steady_shift = 0.0;   ///< Hz relative to the pure-water baseline
    std::optional<double> concentration; ///< empty when the shift is outside the calibration span
};

/// Fit the exponential transient to samples following an onset and invert the calibration.
///
/// `times` and `freqs` start at the onset sample; `level_ref` is the resonance before
/// the event and `f0` the pure-water baseline.
inline ConcentrationEstimate analyze_liquid_segment(std::span<const double> times, std::span<const double> freqs,
                                                    double level_ref, double f0, const PipelineConfig& cfg) {
    std::vector<response::VolumeShift> pts;
    pts.reserve(times.size());
    const double t_start = times.front();
    for (std::size_t i = 0; i < times.size(); ++i) {
        pts.push_back({cfg.injection_rate_assumed * (times[i] - t_start), freqs[i] - level_ref});
    }
    ConcentrationEstimate est;
    est.fit = response::fit_exponential(pts);
    est.onset_time = t_start;
    est.steady_shift = (level_ref - f0) + est.fit.a;
    const auto& curve = cfg.calibration;
    if (est.steady_shift >= curve.min_shift() && est.steady_shift <= curve.max_shift()) {
        est.concentration = response::invert_concentration(est.steady_shift, curve);
    }
    return est;
}

/// Batch liquid analysis of a whole trace: baseline from the leading samples, onset
/// detection on the raw shift, exponential fit of everything after the onset.
/// Returns nothing when no significant shift is present.
inline std::optional<ConcentrationEstimate> estimate_concentration(const FrequencyTrace& trace,
                                                                   const PipelineConfig& cfg) {
    validate(trace);
    validate(cfg);
    const std::size_t nb = cfg.baseline_samples;
    if (trace.size() < nb + 3) {
        return std::nullopt;
    }
    const std::span<const double> x(trace.samples);
    double f0 = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
        f0 += x[i];
    }
    f0 /= static_cast<double>(nb);
    const double sigma = std::max(detail::noise_sigma_from_differences(x.first(nb)), cfg.sigma_floor);

    std::size_t run = 0;
    std::optional<std::size_t> trigger;
    for (std::size_t i = nb; i < x.size(); ++i) {
        run = std::abs(x[i] - f0) > cfg.significance_sigma * sigma ? run + 1 : 0;
        if (run >= cfg.confirm_samples) {
            trigger = i + 1 - run;
            break;
        }
    }
    if (!trigger) {
        return std::nullopt;
    }
    std::size_t start = *trigger;
    while (start > nb && std::abs(x[start - 1] - f0) > cfg.onset_sigma * sigma) {
        --start;
    }
    std::vector<double> times;
    times.reserve(x.size() - start);
    for (std::size_t i = start; i < x.size(); ++i) {
        times.push_back(trace.time_at(i));
    }
    return analyze_liquid_segment(times, x.subspan(start), f0, f0, cfg);
}

/// Per-sample intermediate values, for plotting and debugging.
struct StageSample {
    double time = 0.0;
    double frequency = 0.0;
    double shift = 0.0;      ///< f - f0, zero before a baseline exists
    double derivative = 0.0; ///< Hz/s
    std::optional<double> band_magnitude; ///< present on samples where a window was evaluated
};

/// Streaming two-stage detector. Single consumer: samples must arrive in time order.
class Pipeline {
public:
    enum class State { Acquiring, Monitor, Analyzing, Lockout };

    explicit Pipeline(PipelineConfig cfg)
        : cfg_(std::move(cfg)),
          spectrum_(cfg_.window_length, 1.0 / cfg_.sample_period, cfg_.band),
          filter_(cfg_.band, 1.0 / cfg_.sample_period) {
        validate(cfg_);
        if (cfg_.calibration.empty()) {
            throw ConfigError("pipeline needs a calibration curve");
        }
        plateau_block_samples_ = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(cfg_.plateau_block / cfg_.sample_period)));
        max_analysis_samples_ = static_cast<std::size_t>(cfg_.max_analysis_time / cfg_.sample_period) + 1;
    }

    [[nodiscard]] State state() const { return state_; }
    [[nodiscard]] const PipelineConfig& config() const { return cfg_; }
    [[nodiscard]] double max_band_magnitude() const { return max_magnitude_; }

    void set_stage_observer(std::function<void(const StageSample&)> observer) { observer_ = std::move(observer); }

    /// Feed one sample; returns the reports completed by it.
    std::vector<EventReport> push(double t, double f) {
        std::vector<EventReport> out;
        check_timestamp(t);
        if (!std::isfinite(f)) {
            throw IngestError("non-finite frequency sample at t = " + std::to_string(t));
        }
        StageSample stage{t, f, 0.0, 0.0, std::nullopt};

        if (state_ == State::Lockout) {
            if (t >= lockout_until_) {
                rearm();
            } else {
                prev_f_ = f;
                notify(stage);
                return out;
            }
        }

        if (prev_f_) {
            const double d = (f - *prev_f_) / cfg_.sample_period;
            stage.derivative = d;
            push_derivative(t, d);
        }
        prev_f_ = f;
        if (baseline_) {
            stage.shift = f - *baseline_;
        }

        recent_.push_back({t, f});
        if (recent_.size() > recent_capacity) {
            recent_.pop_front();
        }

        if (auto magnitude = maybe_evaluate_window()) {
            stage.band_magnitude = magnitude->magnitude;
            max_magnitude_ = std::max(max_magnitude_, magnitude->magnitude);
            if (state_ == State::Analyzing) {
                analysis_peak_ = std::max(analysis_peak_, magnitude->magnitude);
            }
            const double floor = noise_floor(t);
            if (classify_window(magnitude->magnitude, cfg_, floor) == WindowDecision::Solid) {
                out.push_back(make_report(magnitude->event_time, EventClass::Solid, magnitude->magnitude, Action::Flush));
                enter_lockout(t);
                notify(stage);
                return out;
            }
            // Only quiet windows feed the noise floor.
            if (state_ == State::Monitor) {
                magnitude_history_.push_back({t, magnitude->magnitude});
            }
        }

        switch (state_) {
        case State::Acquiring: acquire(f); break;
        case State::Monitor: monitor(t, f); break;
        case State::Analyzing:
            if (auto r = analyze_step(t, f, false)) {
                out.push_back(*r);
            }
            break;
        case State::Lockout: break;
        }
        notify(stage);
        return out;
    }

    /// End of stream: completes a pending liquid analysis, or emits an IDLE summary if
    /// the stream produced no reports at all.
    std::vector<EventReport> finish() {
        std::vector<EventReport> out;
        if (state_ == State::Analyzing && analysis_t_.size() >= plateau_block_samples_) {
            if (auto r = analyze_step(analysis_t_.back(), analysis_f_.back(), true)) {
                out.push_back(*r);
            }
        }
        if (reports_emitted_ == 0 && out.empty()) {
            out.push_back(make_report(last_t_.value_or(0.0), EventClass::None, max_magnitude_, Action::Idle));
        }
        return out;
    }

private:
    struct WindowResult {
        double magnitude;
        double event_time;
    };

    static constexpr std::size_t recent_capacity = 64;

    void notify(const StageSample& s) {
        if (observer_) {
            observer_(s);
        }
    }

    void check_timestamp(double t) {
        if (!std::isfinite(t)) {
            throw IngestError("non-finite timestamp");
        }
        if (!first_t_) {
            first_t_ = t;
        } else {
            const double expected = *first_t_ + static_cast<double>(count_) * cfg_.sample_period;
            if (std::abs(t - expected) > cfg_.jitter_tolerance * cfg_.sample_period) {
                std::ostringstream msg;
                msg << "non-uniform sampling: sample " << count_ << " at t = " << t << " s, expected " << expected
                    << " s (period " << cfg_.sample_period << " s)";
                throw IngestError(msg.str());
            }
        }
        last_t_ = t;
        ++count_;
    }

    void push_derivative(double t, double d) {
        derivative_.push_back({t, d});
        if (derivative_.size() > cfg_.window_length) {
            derivative_.pop_front();
        }
        ++derivatives_since_reset_;
    }

    std::optional<WindowResult> maybe_evaluate_window() {
        const std::size_t n = cfg_.window_length;
        if (derivatives_since_reset_ < n || (derivatives_since_reset_ - n) % cfg_.hop != 0) {
            return std::nullopt;
        }
        window_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            window_[i] = derivative_[i].second;
        }
        auto filtered = filter_.filtfilt(window_);
        const auto peak = spectrum_.peak(filtered);
        // Localize the event at the strongest filtered sample of the window.
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(filtered[i]) > std::abs(filtered[arg])) {
                arg = i;
            }
        }
        return WindowResult{peak.magnitude, derivative_[arg].first};
    }

    double noise_floor(double t) {
        while (!magnitude_history_.empty() && magnitude_history_.front().first < t - cfg_.baseline_window) {
            magnitude_history_.pop_front();
        }
        std::vector<double> v;
        v.reserve(magnitude_history_.size());
        for (const auto& [_, m] : magnitude_history_) {
            v.push_back(m);
        }
        return detail::median(std::move(v));
    }

    EventReport make_report(double t, EventClass c, double magnitude, Action a) {
        EventReport r;
        r.time = std::max(t, last_report_time_);
        r.event_class = c;
        r.band_peak_magnitude = magnitude;
        r.action = a;
        last_report_time_ = r.time;
        ++reports_emitted_;
        return r;
    }

    void enter_lockout(double t) {
        state_ = State::Lockout;
        lockout_until_ = t + cfg_.settle_time;
        clear_analysis();
    }

    // After a flush the basin is back to clean water: new f0, empty spectral history.
    void rearm() {
        state_ = State::Acquiring;
        baseline_.reset();
        acquisition_.clear();
        derivative_.clear();
        derivatives_since_reset_ = 0;
        recent_.clear();
        prev_f_.reset();
    }

    void acquire(double f) {
        acquisition_.push_back(f);
        if (acquisition_.size() < cfg_.baseline_samples) {
            return;
        }
        double sum = 0.0;
        for (double v : acquisition_) {
            sum += v;
        }
        baseline_ = sum / static_cast<double>(acquisition_.size());
        level_ref_ = *baseline_;
        sigma_ = std::max(detail::noise_sigma_from_differences(acquisition_), cfg_.sigma_floor);
        acquisition_.clear();
        significant_run_ = 0;
        state_ = State::Monitor;
    }

    void monitor(double t, double f) {
        significant_run_ = std::abs(f - level_ref_) > cfg_.significance_sigma * sigma_ ? significant_run_ + 1 : 0;
        if (significant_run_ < cfg_.confirm_samples) {
            return;
        }
        // Walk back to the first sample above the onset level.
        std::size_t start = recent_.size() - significant_run_;
        while (start > 0 && std::abs(recent_[start - 1].second - level_ref_) > cfg_.onset_sigma * sigma_) {
            --start;
        }
        clear_analysis();
        for (std::size_t i = start; i < recent_.size(); ++i) {
            analysis_t_.push_back(recent_[i].first);
            analysis_f_.push_back(recent_[i].second);
        }
        state_ = State::Analyzing;
        settled_since_.reset();
        (void)t;
        (void)f;
    }

    std::optional<EventReport> analyze_step(double t, double f, bool final) {
        if (!final) {
            analysis_t_.push_back(t);
            analysis_f_.push_back(f);
        }
        const std::size_t b = plateau_block_samples_;
        const double elapsed = t - analysis_t_.front();
        bool settled = false;
        if (analysis_f_.size() >= 2 * b) {
            const std::size_t n = analysis_f_.size();
            double last = 0.0;
            double prev = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                last += analysis_f_[n - 1 - i];
                prev += analysis_f_[n - 1 - b - i];
            }
            last = last / static_cast<double>(b) - level_ref_;
            prev = prev / static_cast<double>(b) - level_ref_;
            const double noise_tol = cfg_.onset_sigma * sigma_ * std::sqrt(2.0 / static_cast<double>(b));
            settled = std::abs(last - prev) <= std::max(noise_tol, cfg_.plateau_relative * std::abs(last));
        }
        if (settled) {
            if (!settled_since_) {
                settled_since_ = t;
            }
        } else {
            settled_since_.reset();
        }
        const bool ready = settled_since_ && t - *settled_since_ >= cfg_.plateau_hold && elapsed >= cfg_.min_analysis_time;
        if (!(ready || final || analysis_f_.size() >= max_analysis_samples_)) {
            return std::nullopt;
        }

        EventReport report;
        try {
            const auto est = analyze_liquid_segment(analysis_t_, analysis_f_, level_ref_, *baseline_, cfg_);
            report = make_report(est.onset_time, EventClass::Liquid, analysis_peak_, Action::Analyze);
            report.fit = est.fit;
            report.estimated_concentration = est.concentration;
            report.out_of_span = !est.concentration.has_value();
            // The next event is measured against the settled level.
            double tail = 0.0;
            for (std::size_t i = analysis_f_.size() - b; i < analysis_f_.size(); ++i) {
                tail += analysis_f_[i];
            }
            level_ref_ = tail / static_cast<double>(b);
        } catch (const FitError& e) {
            // Keep collecting while the transient may still resolve.
            if (!final && analysis_f_.size() < max_analysis_samples_) {
                return std::nullopt;
            }
            report = make_report(analysis_t_.front(), EventClass::Liquid, analysis_peak_, Action::Analyze);
            report.out_of_span = true;
            report.diagnostic = e.what();
        }
        clear_analysis();
        state_ = State::Monitor;
        significant_run_ = 0;
        return report;
    }

    void clear_analysis() {
        analysis_t_.clear();
        analysis_f_.clear();
        analysis_peak_ = 0.0;
        settled_since_.reset();
    }

    PipelineConfig cfg_;
    dsp::BandSpectrum spectrum_;
    dsp::BandpassFilter filter_;
    std::function<void(const StageSample&)> observer_;

    State state_ = State::Acquiring;
    std::optional<double> first_t_;
    std::optional<double> last_t_;
    std::size_t count_ = 0;
    std::optional<double> prev_f_;

    std::deque<std::pair<double, double>> derivative_;
    std::size_t derivatives_since_reset_ = 0;
    std::vector<double> window_;
    std::deque<std::pair<double, double>> magnitude_history_;
    double max_magnitude_ = 0.0;

    std::vector<double> acquisition_;
    std::optional<double> baseline_;
    double level_ref_ = 0.0;
    double sigma_ = 0.0;
    std::size_t significant_run_ = 0;
    std::deque<std::pair<double, double>> recent_;

    std::vector<double> analysis_t_;
    std::vector<double> analysis_f_;
    double analysis_peak_ = 0.0;
    std::optional<double> settled_since_;
    std::size_t plateau_block_samples_ = 27;
    std::size_t max_analysis_samples_ = 0;

    double lockout_until_ = 0.0;
    double last_report_time_ = -INFINITY;
    std::size_t reports_emitted_ = 0;
};

/// Run the streaming pipeline over a whole trace.
inline std::vector<EventReport> run_pipeline(const FrequencyTrace& trace, const PipelineConfig& cfg) {
    Pipeline p(cfg);
    std::vector<EventReport> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        auto r = p.push(trace.time_at(i), trace.samples[i]);
        out.insert(out.end(), r.begin(), r.end());
    }
    auto r = p.finish();
    out.insert(out.end(), r.begin(), r.end());
    return out;
}

/// Band-peak magnitude of every analysis window over a whole trace (derivative,
/// zero-phase bandpass per window, tapered spectrum), evaluated every hop samples.
struct MagnitudeSample {
    double time = 0.0;
    double magnitude = 0.0;
};

inline std::vector<MagnitudeSample> band_magnitude_track(const FrequencyTrace& trace, const PipelineConfig& cfg) {
    validate(cfg);
    const auto d = dsp::differentiate(trace);
    const dsp::BandpassFilter filter(cfg.band, d.sample_rate());
    const dsp::BandSpectrum spectrum(cfg.window_length, d.sample_rate(), cfg.band);
    std::vector<MagnitudeSample> out;
    const std::size_t n = cfg.window_length;
    for (std::size_t end = n; end <= d.size(); end += cfg.hop) {
        const std::span<const double> w(d.samples.data() + (end - n), n);
        out.push_back({d.time_at(end - 1), spectrum.peak(filter.filtfilt(w)).magnitude});
    }
    return out;
}

/// Largest band-peak magnitude over a trace: the solid/liquid discrimination feature.
inline double max_band_magnitude(const FrequencyTrace& trace, const PipelineConfig& cfg) {
    double m = 0.0;
    for (const auto& s : band_magnitude_track(trace, cfg)) {
        m = std::max(m, s.magnitude);
    }
    return m;
}

} // namespace tsense::pipeline
