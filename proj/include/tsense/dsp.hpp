#pragma once

// Signal-processing stages of the detection pipeline: resonance extraction from
// sweeps, first differences, zero-phase bandpass and the windowed band-peak feature.

#include "tsense/constants.hpp"
#include "tsense/errors.hpp"
#include "tsense/trace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <vector>

namespace tsense::dsp {

struct Band {
    double low = 1.6;  ///< Hz
    double high = 3.0; ///< Hz
};

inline void validate(const Band& band, double sample_rate) {
    const double nyquist = 0.5 * sample_rate;
    if (!(band.low > 0.0 && band.low < band.high && band.high < nyquist)) {
        std::ostringstream msg;
        msg << "band [" << band.low << ", " << band.high << "] Hz must satisfy 0 < low < high < Nyquist (" << nyquist
            << " Hz)";
        throw ConfigError(msg.str());
    }
}

/// Frequency of the S11 minimum, refined by a parabola through the minimum and its neighbours.
inline double extract_resonance(const Sweep& sweep) {
    validate(sweep);
    const auto& y = sweep.s11_db;
    const auto& x = sweep.frequencies;
    const auto it = std::min_element(y.begin(), y.end());
    const auto i = static_cast<std::size_t>(it - y.begin());
    if (i == 0 || i + 1 == y.size()) {
        throw RangeError("S11 minimum lies on the sweep edge; widen the sweep span");
    }
    const double d0 = x[i - 1] - x[i];
    const double d2 = x[i + 1] - x[i];
    const double e0 = y[i] - y[i - 1];
    const double e2 = y[i] - y[i + 1];
    const double den = d0 * e2 - d2 * e0;
    if (den == 0.0) {
        return x[i];
    }
    return x[i] + 0.5 * (d0 * d0 * e2 - d2 * d2 * e0) / den;
}

/// Backward first difference divided by the sample period; sample k of the result
/// is stamped with the time of input sample k+1.
inline FrequencyTrace differentiate(const FrequencyTrace& trace) {
    validate(trace);
    if (trace.size() < 2) {
        throw ConfigError("differentiation needs at least two samples");
    }
    FrequencyTrace out{trace.start_time + trace.sample_period, trace.sample_period, {}};
    out.samples.resize(trace.size() - 1);
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        out.samples[i] = (trace.samples[i + 1] - trace.samples[i]) / trace.sample_period;
    }
    return out;
}

/// Second-order section in transposed direct form II, a0 normalized to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    [[nodiscard]] std::complex<double> response(double omega) const {
        const std::complex<double> z1 = std::polar(1.0, -omega);
        const std::complex<double> z2 = z1 * z1;
        return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
    }
};

/// Fourth-order Butterworth bandpass (second-order lowpass prototype, bilinear
/// transform with pre-warped band edges), unity gain at the geometric centre.
class BandpassFilter {
public:
    BandpassFilter(Band band, double sample_rate) : band_(band), fs_(sample_rate) {
        validate(band, sample_rate);
        using C = std::complex<double>;
        const double k = 2.0 * fs_;
        const double wl = k * std::tan(constants::pi * band.low / fs_);
        const double wh = k * std::tan(constants::pi * band.high / fs_);
        const double w0 = std::sqrt(wl * wh);
        const double bw = wh - wl;

        // Upper-half-plane lowpass pole maps to two bandpass poles; their
        // conjugates come from the conjugate prototype pole.
        const C p = std::polar(1.0, 0.75 * constants::pi);
        const C pb = p * bw;
        const C root = std::sqrt(pb * pb - 4.0 * w0 * w0);
        const std::array<C, 2> analog{0.5 * (pb + root), 0.5 * (pb - root)};
        for (std::size_t s = 0; s < 2; ++s) {
            const C z = (k + analog[s]) / (k - analog[s]);
            sections_[s] = Biquad{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)};
        }
        center_omega_ = 2.0 * std::atan(w0 / k);
        const double gain = std::abs(sections_[0].response(center_omega_) * sections_[1].response(center_omega_));
        sections_[0].b0 /= gain;
        sections_[0].b2 /= gain;
    }

    [[nodiscard]] const Band& band() const { return band_; }
    [[nodiscard]] double sample_rate() const { return fs_; }
    [[nodiscard]] const std::array<Biquad, 2>& sections() const { return sections_; }
    /// Centre frequency [Hz] where the gain is exactly one.
    [[nodiscard]] double center_frequency() const { return center_omega_ * fs_ / constants::two_pi; }

    /// Magnitude response of a single forward pass at frequency f [Hz].
    [[nodiscard]] double magnitude(double f) const {
        const double w = constants::two_pi * f / fs_;
        return std::abs(sections_[0].response(w) * sections_[1].response(w));
    }

    /// Causal filtering with a steady-state initial condition for the first sample.
    void filter_in_place(std::span<double> x) const {
        if (x.empty()) {
            return;
        }
        double u = x[0];
        for (const auto& s : sections_) {
            const double y_ss = u * (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
            double z2 = s.b2 * u - s.a2 * y_ss;
            double z1 = s.b1 * u - s.a1 * y_ss + z2;
            for (double& v : x) {
                const double in = v;
                const double out = s.b0 * in + z1;
                z1 = s.b1 * in - s.a1 * out + z2;
                z2 = s.b2 * in - s.a2 * out;
                v = out;
            }
            u = y_ss;
        }
    }

    /// Forward-backward (zero-phase) filtering with odd-reflection edge padding.
    [[nodiscard]] std::vector<double> filtfilt(std::span<const double> x) const {
        const std::size_t n = x.size();
        if (n == 0) {
            return {};
        }
        const std::size_t pad = std::min<std::size_t>(n - 1, edge_padding);
        std::vector<double> buf;
        buf.reserve(n + 2 * pad);
        for (std::size_t i = pad; i > 0; --i) {
            buf.push_back(2.0 * x[0] - x[i]);
        }
        buf.insert(buf.end(), x.begin(), x.end());
        for (std::size_t i = 1; i <= pad; ++i) {
            buf.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        filter_in_place(buf);
        std::reverse(buf.begin(), buf.end());
        filter_in_place(buf);
        std::reverse(buf.begin(), buf.end());
        return {buf.begin() + static_cast<std::ptrdiff_t>(pad), buf.begin() + static_cast<std::ptrdiff_t>(pad + n)};
    }

    static constexpr std::size_t edge_padding = 30;

private:
    Band band_;
    double fs_;
    std::array<Biquad, 2> sections_{};
    double center_omega_ = 0.0;
};

/// Zero-phase bandpass of a whole trace.
inline FrequencyTrace bandpass(const FrequencyTrace& trace, Band band) {
    validate(trace);
    const BandpassFilter filter(band, trace.sample_rate());
    return {trace.start_time, trace.sample_period, filter.filtfilt(trace.samples)};
}

struct BandPeak {
    double magnitude = 0.0; ///< amplitude units of the input (Hz/s for derivative traces)
    double frequency = 0.0; ///< Hz, centre of the peak bin
};

/// Windowed DFT restricted to the bins inside a band.
///
/// A periodic Hann taper is applied and magnitudes are scaled by 2/sum(w), so a
/// unit-amplitude sinusoid centred on a bin reads 1.0.
class BandSpectrum {
public:
    BandSpectrum(std::size_t window_length, double sample_rate, Band band)
        : n_(window_length), fs_(sample_rate), band_(band) {
        validate(band, sample_rate);
        if (window_length < 2) {
            throw ConfigError("spectral window needs at least two samples");
        }
        taper_.resize(n_);
        double sum = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            taper_[i] = 0.5 * (1.0 - std::cos(constants::two_pi * static_cast<double>(i) / static_cast<double>(n_)));
            sum += taper_[i];
        }
        scale_ = 2.0 / sum;
        const double df = fs_ / static_cast<double>(n_);
        for (std::size_t k = 0; k <= n_ / 2; ++k) {
            const double f = df * static_cast<double>(k);
            if (f >= band.low && f <= band.high) {
                bins_.push_back(k);
            }
        }
        if (bins_.empty()) {
            std::ostringstream msg;
            msg << "no DFT bin of a " << n_ << "-sample window falls inside [" << band.low << ", " << band.high
                << "] Hz";
            throw ConfigError(msg.str());
        }
        kernel_.resize(bins_.size() * n_);
        for (std::size_t b = 0; b < bins_.size(); ++b) {
            for (std::size_t i = 0; i < n_; ++i) {
                const double phase = -constants::two_pi * static_cast<double>(bins_[b] * i % n_) / static_cast<double>(n_);
                kernel_[b * n_ + i] = taper_[i] * std::polar(1.0, phase);
            }
        }
    }

    [[nodiscard]] std::size_t window_length() const { return n_; }
    [[nodiscard]] const std::vector<std::size_t>& bins() const { return bins_; }
    [[nodiscard]] double bin_frequency(std::size_t k) const { return fs_ * static_cast<double>(k) / static_cast<double>(n_); }

    [[nodiscard]] BandPeak peak(std::span<const double> window) const {
        if (window.size() != n_) {
            throw ConfigError("spectral window length mismatch");
        }
        BandPeak best;
        for (std::size_t b = 0; b < bins_.size(); ++b) {
            std::complex<double> acc{0.0, 0.0};
            const auto* row = &kernel_[b * n_];
            for (std::size_t i = 0; i < n_; ++i) {
                acc += window[i] * row[i];
            }
            const double mag = std::abs(acc) * scale_;
            if (mag > best.magnitude) {
                best = {mag, bin_frequency(bins_[b])};
            }
        }
        if (best.frequency == 0.0) {
            best.frequency = bin_frequency(bins_.front());
        }
        return best;
    }

private:
    std::size_t n_;
    double fs_;
    Band band_;
    std::vector<double> taper_;
    double scale_ = 1.0;
    std::vector<std::size_t> bins_;
    std::vector<std::complex<double>> kernel_;
};

inline BandPeak band_peak(std::span<const double> window, double sample_rate, Band band) {
    return BandSpectrum(window.size(), sample_rate, band).peak(window);
}

/// Largest tapered in-band Fourier magnitude of a window.
inline double band_peak_magnitude(std::span<const double> window, double sample_rate, Band band) {
    return band_peak(window, sample_rate, band).magnitude;
}

} // namespace tsense::dsp
