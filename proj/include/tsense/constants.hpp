#pragma once

#include <numbers>

namespace tsense::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Vacuum permittivity [F/m] (CODATA 2018).
inline constexpr double vacuum_permittivity = 8.8541878128e-12;

/// Speed of light in vacuum [m/s].
inline constexpr double speed_of_light = 299792458.0;

/// Free-space wave impedance approximation used by the microstrip formulas [Ohm].
inline constexpr double free_space_impedance = 120.0 * std::numbers::pi;

} // namespace tsense::constants
