#pragma once

// Basin mixing, steady-state calibration curves and the exponential transient model.

#include "tsense/dielectric.hpp"
#include "tsense/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace tsense::response {

struct BasinState {
    double volume = 4000.0;      ///< mL
    double concentration = 0.0;  ///< mol/L
};

inline void validate(const BasinState& s) {
    if (!(s.volume > 0.0) || !(s.concentration >= 0.0)) {
        throw DomainError("basin state requires volume > 0 and concentration >= 0");
    }
}

struct Injection {
    double concentration = 0.125; ///< mol/L
    double total_volume = 220.0;  ///< mL
    double rate = 17.0;           ///< mL/s
    double start_time = 0.0;      ///< s

    [[nodiscard]] double duration() const { return total_volume / rate; }
};

/// Perfect-mixing mass balance.
inline BasinState mix_concentration(const BasinState& state, double added_volume, double added_concentration) {
    validate(state);
    if (!(added_volume >= 0.0)) {
        throw DomainError("added volume must be non-negative");
    }
    if (added_volume == 0.0) {
        return state;
    }
    const double volume = state.volume + added_volume;
    const double moles = state.concentration * state.volume + added_concentration * added_volume;
    return {volume, moles / volume};
}

struct CalibrationPoint {
    double concentration = 0.0; ///< mol/L
    double shift = 0.0;         ///< Hz, f - f0
};

/// Monotone concentration -> resonance-shift map.
///
/// Segments between positive concentrations are linear in log(c); a segment that
/// starts at c = 0 is linear in c, since log(0) is not defined.
class CalibrationCurve {
public:
    CalibrationCurve() = default;

    explicit CalibrationCurve(std::vector<CalibrationPoint> points) : points_(std::move(points)) {
        if (points_.size() < 2) {
            throw ConfigError("calibration curve needs at least two points");
        }
        if (points_.front().concentration < 0.0) {
            throw ConfigError("calibration concentrations must be non-negative");
        }
        const double sign = points_[1].shift > points_[0].shift ? 1.0 : -1.0;
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i].concentration > points_[i - 1].concentration)) {
                throw ConfigError("calibration concentrations must be strictly increasing");
            }
            if (!(sign * (points_[i].shift - points_[i - 1].shift) > 0.0)) {
                throw ConfigError("calibration shifts must be strictly monotone");
            }
        }
    }

    [[nodiscard]] const std::vector<CalibrationPoint>& points() const { return points_; }
    [[nodiscard]] bool empty() const { return points_.empty(); }
    [[nodiscard]] double min_concentration() const { return points_.front().concentration; }
    [[nodiscard]] double max_concentration() const { return points_.back().concentration; }
    [[nodiscard]] double min_shift() const { return std::min(points_.front().shift, points_.back().shift); }
    [[nodiscard]] double max_shift() const { return std::max(points_.front().shift, points_.back().shift); }
    [[nodiscard]] bool increasing() const { return points_.back().shift > points_.front().shift; }

    [[nodiscard]] double shift_at(double c) const {
        require_loaded();
        if (!(c >= min_concentration() && c <= max_concentration())) {
            std::ostringstream msg;
            msg << "concentration " << c << " mol/L outside calibration span [" << min_concentration() << ", "
                << max_concentration() << "]";
            throw RangeError(msg.str());
        }
        std::size_t i = segment_by_concentration(c);
        const auto& p = points_[i];
        const auto& q = points_[i + 1];
        if (c == p.concentration) {
            return p.shift;
        }
        if (c == q.concentration) {
            return q.shift;
        }
        const double s = p.concentration > 0.0
                             ? std::log(c / p.concentration) / std::log(q.concentration / p.concentration)
                             : (c - p.concentration) / (q.concentration - p.concentration);
        return p.shift + s * (q.shift - p.shift);
    }

    [[nodiscard]] double concentration_at(double shift) const {
        require_loaded();
        if (!(shift >= min_shift() && shift <= max_shift())) {
            std::ostringstream msg;
            msg << "shift " << shift << " Hz outside calibration span [" << min_shift() << ", " << max_shift()
                << "]";
            throw RangeError(msg.str());
        }
        std::size_t i = segment_by_shift(shift);
        const auto& p = points_[i];
        const auto& q = points_[i + 1];
        if (shift == p.shift) {
            return p.concentration;
        }
        if (shift == q.shift) {
            return q.concentration;
        }
        const double s = (shift - p.shift) / (q.shift - p.shift);
        if (p.concentration > 0.0) {
            return p.concentration * std::pow(q.concentration / p.concentration, s);
        }
        return p.concentration + s * (q.concentration - p.concentration);
    }

private:
    void require_loaded() const {
        if (points_.size() < 2) {
            throw ConfigError("calibration curve is empty");
        }
    }

    [[nodiscard]] std::size_t segment_by_concentration(double c) const {
        auto it = std::upper_bound(points_.begin(), points_.end(), c,
                                   [](double v, const CalibrationPoint& p) { return v < p.concentration; });
        auto idx = static_cast<std::size_t>(it - points_.begin());
        return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, points_.size() - 2);
    }

    [[nodiscard]] std::size_t segment_by_shift(double shift) const {
        const bool inc = increasing();
        for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
            const double a = points_[i].shift;
            const double b = points_[i + 1].shift;
            if (inc ? (shift >= a && shift <= b) : (shift <= a && shift >= b)) {
                return i;
            }
        }
        return points_.size() - 2;
    }

    std::vector<CalibrationPoint> points_;
};

inline double steady_shift(double c, const CalibrationCurve& curve) { return curve.shift_at(c); }

inline double invert_concentration(double shift, const CalibrationCurve& curve) {
    return curve.concentration_at(shift);
}

/// Parameters of the transient model shift(v) = a (1 - exp(-b v)).
struct ExpFit {
    double a = 0.0;            ///< asymptotic shift [Hz]
    double b = 0.0;            ///< rate constant [1/mL]
    double residual_rms = 0.0; ///< Hz
    bool b_identifiable = true;
};

inline double transient_shift(double v, const ExpFit& fit) {
    if (!(v >= 0.0)) {
        throw DomainError("added volume must be non-negative");
    }
    return -fit.a * std::expm1(-fit.b * v);
}

/// Resonator perturbation model linking the medium permittivity to the resonance.
///
/// A fraction `filling_factor` of the resonator's stored electric energy sits in
/// the water, so a small change of the real permittivity moves the resonance by
/// -filling_factor * f * d(eps') / (2 eps'_water). Permittivity is taken as
/// constant over the 670-730 MHz band and evaluated at `reference_frequency`.
struct ResonatorModel {
    double reference_frequency = 700e6; ///< Hz
    double filling_factor = 0.25;
    double temperature_c = dielectric::reference_temperature_c;
    dielectric::SalineModel salinity = dielectric::StogrynModel{};

    [[nodiscard]] double shift(double c) const {
        const double f = reference_frequency;
        const double eps_water = dielectric::saline_permittivity(f, 0.0, temperature_c, salinity).real_part;
        const double eps = dielectric::saline_permittivity(f, c, temperature_c, salinity).real_part;
        return -filling_factor * f * (eps - eps_water) / (2.0 * eps_water);
    }
};

/// Concentration grid used by default: the pure-water baseline plus the NaCl
/// solutions from 3.125e-3 M to 0.5 M.
inline std::vector<double> default_concentration_ladder() {
    return {0.0, 3.125e-3, 6.25e-3, 1.25e-2, 3.125e-2, 6.25e-2, 1.25e-1, 2.5e-1, 5e-1};
}

/// Model-derived calibration curve (not a measurement).
inline CalibrationCurve model_calibration_curve(const std::vector<double>& grid = default_concentration_ladder(),
                                                const ResonatorModel& model = {}) {
    if (grid.size() < 2) {
        throw ConfigError("calibration grid needs at least two concentrations");
    }
    std::vector<CalibrationPoint> pts;
    pts.reserve(grid.size());
    for (double c : grid) {
        pts.push_back({c, model.shift(c)});
    }
    return CalibrationCurve(std::move(pts));
}

} // namespace tsense::response
