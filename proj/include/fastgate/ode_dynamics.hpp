#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "fastgate/schemes.hpp"
#include "fastgate/trap_model.hpp"
#include "fastgate/units.hpp"

namespace fastgate {

// Two-ion classical dynamics in oscillator units: positions in
// sqrt(hbar/(M omega_t)), velocities in that length times omega_t, phases in radians.

/// An instantaneous state-dependent kick of `pairs` pulse pairs (signed).
struct Impulse {
    double time = 0.0;
    double pairs = 0.0;
};

std::vector<Impulse> impulses(const KickTrain& train);
/// Each group delivered at once at its nominal time (infinite repetition rate).
std::vector<Impulse> impulses(const PulseSequence& seq);
/// Groups spread over consecutive pulses at spacing 1/rate, centred exactly on t_k (no grid).
std::vector<Impulse> unsnapped_impulses(const PulseSequence& seq, double rate);

enum class CoulombModel { Full, Linearized };
enum class Aggregation { WorstCase, BasisAverage };

struct SimulationOptions {
    double step = two_pi / 4096.0;   // 2^-12 trap periods
    CoulombModel coulomb = CoulombModel::Full;
    double kick_factor = 2.0;        // momentum per pulse pair in units of hbar k
    double potential_offset = 0.0;   // constant added to V
    bool record = false;
    std::optional<double> begin;     // default: first kick
    std::optional<double> end;       // default: last kick; never before it
    int max_refinements = 4;
    double drift_tolerance = 1e-9;   // relative energy drift per trap period
    bool parallel = true;
};

/// Basis states |q_A q_B>, index 2 q_A + q_B.
enum class BasisState { S00 = 0, S01 = 1, S10 = 2, S11 = 3 };

struct TrajectoryState {
    double t = 0.0;
    std::array<double, 2> x{};  // absolute positions
    std::array<double, 2> v{};
    double phase = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryState> history;  // empty unless recording
    TrajectoryState final;
    double energy_drift = 0.0;             // relative drift per trap period
    long steps = 0;
};

struct TrajectorySet {
    std::array<Trajectory, 4> basis;
    Trajectory reference;
    std::array<double, 2> equilibrium{};  // absolute equilibrium positions
    double begin = 0.0, end = 0.0;
    double step = 0.0;                    // step actually used after refinement
    int refinements = 0;
};

/// Two-ion potential in displacement coordinates about equilibrium.
class TwoIonSystem {
public:
    TwoIonSystem(const TrapConfiguration& trap, CoulombModel model);

    std::array<double, 2> equilibrium() const { return equilibrium_; }
    double separation() const { return separation_; }
    double coulomb() const { return coulomb_; }
    double kick_velocity(double kick_factor) const { return kick_factor * std::numbers::sqrt2 * eta_; }
    CoulombModel model() const { return model_; }

    /// Potential energy relative to equilibrium.
    double potential(double d1, double d2) const;
    void force(double d1, double d2, double& f1, double& f2) const;

private:
    CoulombModel model_;
    double coulomb_;     // dimensionless Coulomb constant
    double separation_;  // equilibrium separation
    double spring_;      // 2 C / r^3
    double eta_;
    std::array<double, 2> equilibrium_{};
};

TrajectoryState apply_kick(const TrajectoryState& state, double pairs, BasisState basis,
                           double kick_velocity);

TrajectorySet simulate_gate(std::span<const Impulse> kicks, const TrapConfiguration& trap,
                            const SimulationOptions& options = {});
TrajectorySet simulate_gate(const KickTrain& train, const TrapConfiguration& trap,
                            const SimulationOptions& options = {});

/// Instantaneous groups; the run ends no earlier than the end of the scheme window.
TrajectorySet simulate_sequence(const PulseSequence& seq, const TrapConfiguration& trap,
                                SimulationOptions options = {});
/// Grid-snapped kick train at `rate`; ends no earlier than the end of the scheme window.
TrajectorySet simulate_sequence(const PulseSequence& seq, double rate, const TrapConfiguration& trap,
                                SimulationOptions options = {});

/// End-of-gate quantities every cost is built from.
struct OdeResiduals {
    std::array<double, 4> phase{};                 // boundary-corrected action per basis state
    std::array<std::array<double, 2>, 4> dx{};     // displacement from the reference, per ion
    std::array<std::array<double, 2>, 4> dv{};
};

OdeResiduals ode_residuals(const TrajectorySet& set);

struct OdeInfidelity {
    double phase_mismatch = 0.0;
    std::array<double, 2> displacement{};                // per ion, aggregated over basis states
    std::array<std::array<double, 2>, 4> per_basis{};    // Delta P per basis state and ion
    double total = 0.0;
    double mean_occupation = 0.0;
    Aggregation aggregation = Aggregation::WorstCase;
};

double ode_phase_mismatch(const OdeResiduals& r);
double ode_phase_mismatch(const TrajectorySet& set);
double ode_motional_displacement(const TrajectorySet& set, int ion);
OdeInfidelity ode_infidelity(const OdeResiduals& r, double nbar,
                             Aggregation aggregation = Aggregation::WorstCase);
OdeInfidelity ode_infidelity(const TrajectorySet& set, double nbar,
                             Aggregation aggregation = Aggregation::WorstCase);

}  // namespace fastgate
