#pragma once

// Quasi-static microstrip design formulas and transmission-line input impedance.

#include "tsense/constants.hpp"
#include "tsense/errors.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <variant>

namespace tsense::microstrip {

using Complex = std::complex<double>;

/// Relative denominator magnitude below which an impedance is reported as a pole.
inline constexpr double pole_tolerance = 1e-12;

namespace detail {

inline void require_geometry(double w, double h, double eps_r) {
    if (!(w > 0.0) || !(h > 0.0)) {
        throw DomainError("trace width and substrate height must be positive");
    }
    if (!(eps_r >= 1.0)) {
        throw DomainError("substrate relative permittivity must be >= 1");
    }
}

} // namespace detail

/// Effective permittivity of a microstrip of width w over a substrate of height h.
inline double effective_permittivity(double w, double h, double eps_r) {
    detail::require_geometry(w, h, eps_r);
    return 0.5 * (eps_r + 1.0) + 0.5 * (eps_r - 1.0) / std::sqrt(1.0 + 12.0 * h / w);
}

/// Characteristic impedance, wide-strip branch (w/h >= 1) of the Hammerstad-style fit.
inline double characteristic_impedance(double w, double h, double eps_r) {
    detail::require_geometry(w, h, eps_r);
    const double u = w / h;
    if (u < 1.0) {
        std::ostringstream msg;
        msg << "w/h = " << u << " is below 1; the characteristic-impedance formula is only valid for w/h >= 1";
        throw ValidityError(msg.str());
    }
    const double eps_eff = effective_permittivity(w, h, eps_r);
    return constants::free_space_impedance / (std::sqrt(eps_eff) * (u + 1.393 + 0.667 * std::log(u + 1.444)));
}

class MicrostripLine {
public:
    MicrostripLine(double trace_width, double substrate_height, double substrate_eps_r)
        : w_(trace_width), h_(substrate_height), eps_r_(substrate_eps_r),
          eps_eff_(effective_permittivity(trace_width, substrate_height, substrate_eps_r)),
          z0_(characteristic_impedance(trace_width, substrate_height, substrate_eps_r)) {}

    [[nodiscard]] double trace_width() const { return w_; }
    [[nodiscard]] double substrate_height() const { return h_; }
    [[nodiscard]] double substrate_eps_r() const { return eps_r_; }
    [[nodiscard]] double eps_eff() const { return eps_eff_; }
    [[nodiscard]] double z0() const { return z0_; }

private:
    double w_, h_, eps_r_, eps_eff_, z0_;
};

/// Rogers RT5880 laminate the sensor is built on.
struct Substrate {
    double eps_r = 2.2;
    double loss_tangent = 0.009;
    double height = 0.79e-3;          ///< m
    double copper_thickness = 0.018e-3; ///< m, metadata only
};

inline constexpr Substrate rt5880{};

/// Phase constant beta = 2*pi*f*sqrt(eps_eff)/c [rad/m].
inline double phase_constant(double f, double eps_eff) {
    if (!(f > 0.0)) {
        throw DomainError("frequency must be positive");
    }
    if (!(eps_eff >= 1.0)) {
        throw DomainError("effective permittivity must be >= 1");
    }
    return constants::two_pi * f * std::sqrt(eps_eff) / constants::speed_of_light;
}

inline double guided_wavelength(double beta) { return constants::two_pi / beta; }

/// Input impedance that may be a pole of the line equation.
class InputImpedance {
public:
    static InputImpedance finite(Complex z) { return InputImpedance(z, false); }
    static InputImpedance pole() {
        return InputImpedance({std::numeric_limits<double>::infinity(), 0.0}, true);
    }

    [[nodiscard]] bool is_pole() const { return pole_; }
    /// Finite impedance; throws on a pole.
    [[nodiscard]] Complex value() const {
        if (pole_) {
            throw DomainError("impedance is a pole (infinite)");
        }
        return z_;
    }
    [[nodiscard]] double reactance() const { return value().imag(); }

private:
    InputImpedance(Complex z, bool pole) : z_(z), pole_(pole) {}
    Complex z_;
    bool pole_;
};

struct OpenCircuit {};

using Termination = std::variant<Complex, OpenCircuit>;

/// Input impedance of a line of length l terminated in z_load.
///
/// Evaluated as Z0 (ZL cos + j Z0 sin) / (Z0 cos + j ZL sin), which equals the
/// tan form but stays finite at beta*l = pi/2.
inline InputImpedance terminated_line_impedance(double z0, Complex z_load, double beta, double length) {
    if (!(z0 > 0.0) || !(length > 0.0) || !(beta > 0.0)) {
        throw DomainError("line impedance requires z0 > 0, beta > 0, length > 0");
    }
    const double bl = beta * length;
    const double c = std::cos(bl);
    const double s = std::sin(bl);
    const Complex j{0.0, 1.0};
    const Complex num = z0 * (z_load * c + j * z0 * s);
    const Complex den = z0 * c + j * z_load * s;
    if (std::abs(den) < pole_tolerance * std::abs(num)) {
        return InputImpedance::pole();
    }
    return InputImpedance::finite(num / den);
}

/// Open-ended stub: -j Z0 cot(beta*l).
inline InputImpedance open_stub_impedance(double z0, double beta, double length) {
    if (!(z0 > 0.0) || !(length > 0.0) || !(beta > 0.0)) {
        throw DomainError("stub impedance requires z0 > 0, beta > 0, length > 0");
    }
    const double bl = beta * length;
    const double c = std::cos(bl);
    const double s = std::sin(bl);
    if (std::abs(s) < pole_tolerance * std::abs(c)) {
        return InputImpedance::pole();
    }
    return InputImpedance::finite({0.0, -z0 * c / s});
}

struct LineSection {
    MicrostripLine line;
    double length = 0.0;
    Termination termination = OpenCircuit{};
};

inline InputImpedance input_impedance(const LineSection& section, double f) {
    if (!(section.length > 0.0)) {
        throw DomainError("line section length must be positive");
    }
    const double beta = phase_constant(f, section.line.eps_eff());
    if (std::holds_alternative<OpenCircuit>(section.termination)) {
        return open_stub_impedance(section.line.z0(), beta, section.length);
    }
    return terminated_line_impedance(section.line.z0(), std::get<Complex>(section.termination), beta, section.length);
}

/// Open-stub length in (0, lambda_g/4) whose reactance equals that of capacitance C at f.
///
/// Bisection on the monotone function cot(beta*l) over (eps, lambda_g/4 - eps) with
/// eps = lambda_g * 1e-9, iterated to full double resolution.
inline double synthesize_stub_length(double target_capacitance, double f, const MicrostripLine& line) {
    if (!(target_capacitance > 0.0)) {
        throw DomainError("target capacitance must be positive");
    }
    const double beta = phase_constant(f, line.eps_eff());
    const double lambda_g = guided_wavelength(beta);
    const double z0 = line.z0();
    const double omega = constants::two_pi * f;

    // -Z0 cot(beta l) = -1/(omega C)  <=>  g(l) = Z0 cot(beta l) - 1/(omega C) = 0, g decreasing.
    const double target = 1.0 / (omega * target_capacitance);
    auto g = [&](double l) { return z0 / std::tan(beta * l) - target; };

    const double edge = lambda_g * 1e-9;
    double lo = edge;
    double hi = 0.25 * lambda_g - edge;
    const double g_lo = g(lo);
    const double g_hi = g(hi);
    if (!(g_lo >= 0.0 && g_hi <= 0.0)) {
        const double c_min = 1.0 / (omega * z0 / std::tan(beta * lo));
        const double c_max = 1.0 / (omega * z0 / std::tan(beta * hi));
        std::ostringstream msg;
        msg << "no open-stub length in (0, lambda_g/4) realizes C = " << target_capacitance
            << " F at f = " << f << " Hz; achievable range is [" << c_min << ", " << c_max << "] F";
        throw SynthesisError(msg.str());
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (g(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Capacitance equivalent to a negative reactance x at frequency f.
inline double reactance_to_capacitance(double x, double f) { return -1.0 / (constants::two_pi * f * x); }

} // namespace tsense::microstrip
