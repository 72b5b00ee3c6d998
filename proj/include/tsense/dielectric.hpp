#pragma once

// Complex permittivity of pure and saline water.
//
// Sign convention: eps = eps' - j*eps'' with eps'' >= 0. The single-relaxation
// term eps_inf + (eps_s - eps_inf) / (1 + j*w*tau) already has a negative
// imaginary part in this convention, and the ionic conduction term adds
// sigma / (w * eps0) to eps''.

#include "tsense/constants.hpp"
#include "tsense/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tsense::dielectric {

struct ComplexPermittivity {
    double real_part = 1.0;
    double loss_part = 0.0;

    /// The permittivity as a complex number, eps' - j*eps''.
    [[nodiscard]] std::complex<double> as_complex() const { return {real_part, -loss_part}; }
};

struct WaterDebyeParams {
    double eps_inf = 5.2;
    double eps_static = 78.36;
    double tau = 8.27e-12; ///< relaxation time [s]
};

struct SalineDebyeParams {
    double eps_inf = 5.2;
    double eps_static = 78.36;
    double tau = 8.27e-12;     ///< relaxation time [s]
    double conductivity = 0.0; ///< ionic conductivity [S/m]
};

/// Pure-water reference values at 25 degC (Noertemann et al., J. Phys. Chem. A 101, 1997).
inline constexpr WaterDebyeParams water_defaults_25c{};
inline constexpr double reference_temperature_c = 25.0;

inline void validate(const WaterDebyeParams& p) {
    if (!(p.eps_inf > 1.0) || !(p.eps_static > p.eps_inf) || !(p.tau > 0.0)) {
        throw DomainError("water Debye parameters require eps_static > eps_inf > 1 and tau > 0");
    }
}

inline void validate(const SalineDebyeParams& p) {
    if (!(p.eps_static > p.eps_inf) || !(p.tau > 0.0) || !(p.conductivity >= 0.0)) {
        throw DomainError("saline Debye parameters require eps_static > eps_inf, tau > 0, conductivity >= 0");
    }
}

namespace detail {

inline void require_positive_frequency(double f) {
    if (!(f > 0.0) || !std::isfinite(f)) {
        throw DomainError("frequency must be positive and finite, got " + std::to_string(f));
    }
}

// Relaxation term only; returns (eps', eps'').
inline ComplexPermittivity relaxation(double f, double eps_inf, double eps_static, double tau) {
    const double wt = constants::two_pi * f * tau;
    const double denom = 1.0 + wt * wt;
    const double delta = eps_static - eps_inf;
    return {eps_inf + delta / denom, delta * wt / denom};
}

} // namespace detail

/// Single-relaxation Debye permittivity of pure water at frequency f [Hz].
inline ComplexPermittivity debye_pure_water(double f, const WaterDebyeParams& p = water_defaults_25c) {
    detail::require_positive_frequency(f);
    validate(p);
    return detail::relaxation(f, p.eps_inf, p.eps_static, p.tau);
}

/// Conduction contribution sigma / (2*pi*f*eps0) to the loss part.
inline double conduction_loss(double f, double conductivity) {
    detail::require_positive_frequency(f);
    return conductivity / (constants::two_pi * f * constants::vacuum_permittivity);
}

/// Debye permittivity of an ionic solution, including the conduction loss.
inline ComplexPermittivity debye_saline(double f, const SalineDebyeParams& p) {
    detail::require_positive_frequency(f);
    validate(p);
    auto e = detail::relaxation(f, p.eps_inf, p.eps_static, p.tau);
    e.loss_part += conduction_loss(f, p.conductivity);
    return e;
}

inline double loss_tangent(const ComplexPermittivity& e) {
    if (!(e.real_part > 0.0)) {
        throw DomainError("loss tangent requires a positive real permittivity");
    }
    return e.loss_part / e.real_part;
}

// ---------------------------------------------------------------------------
// Salinity models
// ---------------------------------------------------------------------------

/// Stogryn (1971) saline-water relations in normality and temperature. For NaCl
/// the molarity equals the normality. The pure-water anchor is the configured
/// 25 degC record; Stogryn's temperature polynomials supply only the ratio to 25 degC.
struct StogrynModel {
    WaterDebyeParams water = water_defaults_25c;

    static double static_permittivity_pure(double t) {
        return 87.74 - 0.40008 * t + 9.398e-4 * t * t + 1.410e-6 * t * t * t;
    }
    static double relaxation_time_pure(double t) {
        // Stogryn tabulates 2*pi*tau.
        return (1.1109e-10 - 3.824e-12 * t + 6.938e-14 * t * t - 5.096e-16 * t * t * t) / constants::two_pi;
    }
    static double permittivity_factor(double n) {
        return 1.0 - 0.2551 * n + 5.151e-2 * n * n - 6.889e-3 * n * n * n;
    }
    static double relaxation_factor(double n, double t) {
        return 0.1463e-2 * n * t + 1.0 - 0.04896 * n - 0.02967 * n * n + 5.644e-3 * n * n * n;
    }
    static double conductivity(double n, double t) {
        const double d = reference_temperature_c - t;
        const double s25 = n * (10.394 - 2.3776 * n + 0.68258 * n * n - 0.13538 * n * n * n + 1.0086e-2 * n * n * n * n);
        const double alpha = 2.033e-2 + 1.266e-4 * d + 2.464e-6 * d * d - n * (1.849e-5 - 2.551e-7 * d + 2.551e-8 * d * d);
        return s25 * std::exp(-d * alpha);
    }

    [[nodiscard]] WaterDebyeParams pure_water(double t) const {
        const double t_ref = reference_temperature_c;
        return {water.eps_inf,
                water.eps_static * static_permittivity_pure(t) / static_permittivity_pure(t_ref),
                water.tau * relaxation_time_pure(t) / relaxation_time_pure(t_ref)};
    }

    [[nodiscard]] SalineDebyeParams evaluate(double c, double t) const {
        const auto w = pure_water(t);
        return {w.eps_inf, w.eps_static * permittivity_factor(c), w.tau * relaxation_factor(c, t), conductivity(c, t)};
    }
};

/// One row of a measured saline calibration table.
struct SalineTableRow {
    double concentration = 0.0; ///< mol/L
    double eps_static = 0.0;
    double tau = 0.0;          ///< s
    double conductivity = 0.0; ///< S/m
};

/// Piecewise-linear interpolation over user-supplied measurements. Temperature is
/// ignored: the table is a calibration at whatever temperature it was measured.
class TableModel {
public:
    TableModel(std::vector<SalineTableRow> rows, double eps_inf = water_defaults_25c.eps_inf)
        : rows_(std::move(rows)), eps_inf_(eps_inf) {
        if (rows_.size() < 2) {
            throw ConfigError("saline table needs at least two rows");
        }
        for (std::size_t i = 1; i < rows_.size(); ++i) {
            if (!(rows_[i].concentration > rows_[i - 1].concentration)) {
                throw ConfigError("saline table concentrations must be strictly increasing");
            }
        }
    }

    [[nodiscard]] const std::vector<SalineTableRow>& rows() const { return rows_; }

    [[nodiscard]] SalineDebyeParams evaluate(double c, double /*t*/) const {
        if (c < rows_.front().concentration || c > rows_.back().concentration) {
            throw RangeError("concentration " + std::to_string(c) + " outside saline table span [" +
                             std::to_string(rows_.front().concentration) + ", " +
                             std::to_string(rows_.back().concentration) + "]");
        }
        auto hi = std::upper_bound(rows_.begin(), rows_.end(), c,
                                   [](double v, const SalineTableRow& r) { return v < r.concentration; });
        if (hi == rows_.end()) {
            --hi;
        }
        const auto lo = hi - 1;
        const double s = (c - lo->concentration) / (hi->concentration - lo->concentration);
        auto lerp = [s](double a, double b) { return a + s * (b - a); };
        return {eps_inf_, lerp(lo->eps_static, hi->eps_static), lerp(lo->tau, hi->tau),
                lerp(lo->conductivity, hi->conductivity)};
    }

private:
    std::vector<SalineTableRow> rows_;
    double eps_inf_;
};

using SalineModel = std::variant<StogrynModel, TableModel>;

inline constexpr double max_concentration = 1.0; ///< mol/L
inline constexpr double min_temperature_c = 0.0;
inline constexpr double max_temperature_c = 50.0;

/// Debye parameters of NaCl solution at molarity c [mol/L] and temperature [degC].
inline SalineDebyeParams saline_params_from_concentration(double c, double temperature_c,
                                                          const SalineModel& model = StogrynModel{}) {
    if (!(c >= 0.0 && c <= max_concentration)) {
        throw DomainError("concentration must lie in [0, 1] mol/L, got " + std::to_string(c));
    }
    if (!(temperature_c >= min_temperature_c && temperature_c <= max_temperature_c)) {
        throw DomainError("temperature must lie in [0, 50] degC, got " + std::to_string(temperature_c));
    }
    return std::visit([&](const auto& m) { return m.evaluate(c, temperature_c); }, model);
}

/// Convenience: saline permittivity at frequency f for concentration c.
inline ComplexPermittivity saline_permittivity(double f, double c, double temperature_c = reference_temperature_c,
                                               const SalineModel& model = StogrynModel{}) {
    return debye_saline(f, saline_params_from_concentration(c, temperature_c, model));
}

} // namespace tsense::dielectric
