#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fastgate/units.hpp"

namespace fastgate {

enum class Architecture { PaulTrap, MicrotrapArray };

struct TrapConfiguration {
    Architecture architecture = Architecture::PaulTrap;
    int ion_count = 2;
    double trap_frequency = constants::default_trap_frequency;  // rad/s
    double ion_mass = constants::calcium40_mass;                // kg
    double inter_trap_distance = 0.0;                            // m, microtraps only
    std::optional<double> lamb_dicke = constants::default_lamb_dicke;
    std::optional<double> laser_wavenumber;                      // rad/m
    double mean_occupation = constants::default_mean_occupation;
    double elementary_charge = constants::elementary_charge;
    double vacuum_permittivity = constants::vacuum_permittivity;
    // Direct two-mode specification (e.g. radial modes). For microtraps the well
    // spacing is derived from it when no distance is given.
    std::optional<double> chi;
    // Gate ions; negative means the two central ions.
    int ion_a = -1;
    int ion_b = -1;

    void validate() const;

    /// eta from the explicit value, else from the wavenumber.
    double effective_lamb_dicke() const;
    /// (e^2 / (4 pi eps0 M omega_t^2))^(1/3) in meters.
    double length_scale() const;
    /// sqrt(hbar / (M omega_t)) in meters.
    double oscillator_length() const;
    OscillatorUnits units() const { return {trap_frequency, oscillator_length()}; }
    /// Dimensionless Coulomb strength (length_scale / oscillator_length)^3.
    double coulomb_strength() const;
    /// Well spacing in meters, resolving a chi-only microtrap specification.
    double well_spacing() const;
    int gate_ion_a() const;
    int gate_ion_b() const;
};

struct ModeStructure {
    double trap_frequency = 0.0;             // rad/s
    std::vector<double> frequencies;         // rad/s, ascending
    Eigen::MatrixXd coupling;                // P x ion_count, rows b_p
    std::vector<double> equilibrium_positions;  // m

    int mode_count() const { return static_cast<int>(frequencies.size()); }
    int ion_count() const { return static_cast<int>(coupling.cols()); }
    double ratio(int p) const { return frequencies[p] / trap_frequency; }
};

struct Equilibrium {
    std::vector<double> positions;      // m, ascending
    std::vector<double> displacements;  // m, from the well centers (zero trap center for Paul traps)
    double residual = 0.0;              // max force imbalance in length-scale units
    int iterations = 0;
};

Equilibrium equilibrium_positions(const TrapConfiguration& config);

/// Dimensionless Hessian (units M omega_t^2) of the potential at equilibrium.
Eigen::MatrixXd potential_hessian(const TrapConfiguration& config);

ModeStructure normal_modes(const TrapConfiguration& config);

double chi_from_modes(const ModeStructure& modes);

ModeStructure modes_from_chi(double chi, double trap_frequency);

/// Two-ion microtrap chi for a given well spacing (meters).
double microtrap_chi(const TrapConfiguration& config, double spacing);

/// Inverse of microtrap_chi; chi must lie in (0, chi at touching wells).
double microtrap_spacing_for_chi(const TrapConfiguration& config, double chi);

}  // namespace fastgate
