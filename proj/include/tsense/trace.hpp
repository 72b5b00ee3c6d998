#pragma once

#include "tsense/errors.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace tsense {

/// Uniformly sampled time series (resonance frequency, shift or its derivative).
struct FrequencyTrace {
    double start_time = 0.0;    ///< s
    double sample_period = 0.110; ///< s
    std::vector<double> samples;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }
    [[nodiscard]] double time_at(std::size_t i) const {
        return start_time + static_cast<double>(i) * sample_period;
    }
    [[nodiscard]] double sample_rate() const { return 1.0 / sample_period; }
    [[nodiscard]] double nyquist() const { return 0.5 / sample_period; }
};

inline void validate(const FrequencyTrace& t) {
    if (!(t.sample_period > 0.0) || !std::isfinite(t.sample_period)) {
        throw ConfigError("trace sample period must be positive");
    }
    for (double s : t.samples) {
        if (!std::isfinite(s)) {
            throw IngestError("trace contains a non-finite sample");
        }
    }
}

/// Reflection-coefficient sweep |S11| in dB over ascending frequencies.
struct Sweep {
    std::vector<double> frequencies; ///< Hz, strictly ascending
    std::vector<double> s11_db;
};

inline void validate(const Sweep& s) {
    if (s.frequencies.size() != s.s11_db.size()) {
        throw IngestError("sweep frequency and S11 columns differ in length");
    }
    if (s.frequencies.size() < 3) {
        throw IngestError("sweep needs at least three points");
    }
    for (std::size_t i = 1; i < s.frequencies.size(); ++i) {
        if (!(s.frequencies[i] > s.frequencies[i - 1])) {
            throw IngestError("sweep frequencies must be strictly ascending");
        }
    }
}

} // namespace tsense
