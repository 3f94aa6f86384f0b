#pragma once

#include <string>
#include <vector>

#include "fastgate/global_opt.hpp"
#include "fastgate/ode_dynamics.hpp"

namespace fastgate {

struct LocalSearchConfig {
    double rate = 0.0;              // repetition rate, pulse pairs per unit time
    double extension = 1.25;        // timings confined to [0, extension * T_G]
    double simplex_step = 4.0;      // initial simplex edge in grid slots
    double slot_tolerance = 1e-3;   // simplex edge at which a pass stops, in grid slots
    int newton_iterations = 40;     // Levenberg-Marquardt iterations on the unsnapped ODE (0 = off)
    int simplex_passes = 1;         // restarts of the simplex from its best vertex
    long simplex_evaluations = 300; // ODE evaluations per simplex pass
    long max_evaluations = 4000;    // ODE evaluations
    int shift_radius = 0;           // exhaustive grid-shift search radius (0 = off)
    int screen_radius = 2;          // surrogate-screened shift search radius (0 = off)
    int screen_candidates = 24;     // surrogate candidates verified by the ODE per round
    int screen_rounds = 12;
    Aggregation aggregation = Aggregation::WorstCase;
    SimulationOptions simulation;
    bool parallel = true;

    void validate() const;
};

struct RefinementStep {
    int iteration = 0;
    std::string step;
    long evaluations = 0;  // cumulative ODE evaluations
    double cost = 0.0;     // incumbent cost after the step
};

struct LocalResult {
    GateSolution solution;       // groups at block centroids in the [0, extension T_G] frame
    OdeInfidelity ode;           // snapped cost of the returned solution
    OdeInfidelity input;         // snapped cost of the input
    std::vector<RefinementStep> log;
    long evaluations = 0;
    long surrogate_evaluations = 0;
    bool budget_exhausted = false;
};

LocalResult optimize_local(const GateSolution& solution, const TrapConfiguration& trap,
                           const LocalSearchConfig& config);

/// Exhaustive search over integer shifts of every group's block within +-shift_radius slots.
LocalResult enumerate_grid_shifts(const GateSolution& solution, const TrapConfiguration& trap,
                                  const LocalSearchConfig& config);

/// Snapped ODE cost of a solution's sequence as used by the local search.
OdeInfidelity snapped_cost(const PulseSequence& seq, const TrapConfiguration& trap,
                           const LocalSearchConfig& config);

}  // namespace fastgate
