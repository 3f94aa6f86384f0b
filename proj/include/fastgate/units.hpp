#pragma once

#include <numbers>

namespace fastgate {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;              // J s
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg
inline constexpr double calcium40_mass = 39.962590863 * atomic_mass_unit;
inline constexpr double calcium_wavelength = 393e-9;          // m
inline constexpr double default_trap_frequency = 2.0 * std::numbers::pi * 1.2e6;
inline constexpr double default_lamb_dicke = 0.16;
inline constexpr double default_mean_occupation = 0.1;
}  // namespace constants

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Internal units: hbar = M = omega_t = 1. Times are in 1/omega_t, lengths in
// sqrt(hbar/(M omega_t)), repetition rates in pulse pairs per unit time.
struct OscillatorUnits {
    double trap_frequency;  // rad/s
    double length;          // m

    double seconds(double t) const { return t / trap_frequency; }
    double from_seconds(double s) const { return s * trap_frequency; }
    double rate(double hertz) const { return hertz / trap_frequency; }
    double hertz(double rate) const { return rate * trap_frequency; }
    double meters(double x) const { return x * length; }
    double velocity(double v) const { return v * length * trap_frequency; }
};

/// Dimensionless time of `periods` trap periods.
inline double periods_to_time(double periods) { return two_pi * periods; }
inline double time_to_periods(double t) { return t / two_pi; }

/// Repetition rate expressed in units of omega_t / 2pi (pulse pairs per trap period).
inline double rate_per_period(double rate) { return two_pi * rate; }
inline double rate_from_per_period(double per_period) { return per_period / two_pi; }

}  // namespace fastgate
