#pragma once

// Serial reference versions of the OpenMP kernels, kept for tests and benchmarks.

#include <span>
#include <vector>

#include "fastgate/global_opt.hpp"
#include "fastgate/linear_cost.hpp"
#include "fastgate/local_opt.hpp"
#include "fastgate/ode_dynamics.hpp"

namespace fastgate::reference {

/// Direct O(N^2) pair sum.
double phase_sum(std::span<const double> z, std::span<const double> t, double w);

/// Truncated cost from the direct pair sum and a direct displacement sum.
InfidelityBreakdown truncated_infidelity(std::span<const double> z, std::span<const double> t,
                                         const CostModel& m);

std::vector<double> evaluate_batch(const FixedTimingCost& cost,
                                   const std::vector<std::vector<double>>& candidates);

TrajectorySet simulate_sequence(const PulseSequence& seq, const TrapConfiguration& trap,
                                SimulationOptions options);

GlobalResult optimize_global(GlobalSearchConfig config, const TrapConfiguration& trap,
                             const ModeStructure& modes);

LocalResult optimize_local(const GateSolution& solution, const TrapConfiguration& trap,
                           LocalSearchConfig config);

}  // namespace fastgate::reference
