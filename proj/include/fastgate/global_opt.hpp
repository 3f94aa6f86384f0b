#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fastgate/linear_cost.hpp"
#include "fastgate/schemes.hpp"
#include "fastgate/trap_model.hpp"

namespace fastgate {

enum class RoundingMode {
    Nearest,  // round each weight independently
    Polish,   // nearest, then +-1 single and pair integer descent
    Lattice,  // sample roundings along the weakest directions of the residual Jacobian, then polish
};

const char* rounding_name(RoundingMode mode);
RoundingMode parse_rounding(const std::string& name);

struct GlobalSearchConfig {
    SchemeSpec scheme;
    double gate_time = 0.0;       // dimensionless
    double initial_bound = 20.0;  // |z| bound of the first stage
    double expansion = 1.5;
    int stages = 6;
    int restarts = 64;
    std::uint64_t seed = 1;
    double gradient_tolerance = 1e-12;
    double relative_tolerance = 1e-15;
    int max_iterations = 1000;
    RoundingMode rounding = RoundingMode::Lattice;
    int lattice_samples = 4000;
    double lattice_radius = 3.0;
    std::optional<double> max_rate;          // cap on the solution's minimum repetition rate
    std::optional<long> evaluation_budget;   // equal-compute comparisons
    int candidates = 8;                      // distinct eligible solutions kept, best first
    bool parallel = true;

    void validate() const;
};

struct SearchMetadata {
    std::string phase = "global";
    int stage = -1;
    int restart = -1;
    std::uint64_t seed = 0;
    long evaluations = 0;
    double continuous_cost = 0.0;
    double rounding_degradation = 1.0;  // rounded cost / continuous cost
    bool rounding_flagged = false;
    bool no_solution = false;
    bool budget_exhausted = false;
    std::string diagnostics;
};

struct GateSolution {
    SchemeSpec scheme;
    std::vector<double> parameters;  // integer weights (and timings for GZC/FRAG)
    PulseSequence sequence;
    InfidelityBreakdown breakdown;
    double min_rate = 0.0;           // pulse pairs per unit time; 0 for fewer than two groups
    SearchMetadata meta;
};

struct StageRecord {
    int stage = 0;
    double bound = 0.0;
    int restarts = 0;
    long evaluations = 0;
    double stage_best_cost = 0.0;
    int stage_best_restart = -1;
    double best_cost = 0.0;
    int eligible = 0;
};

struct GlobalResult {
    GateSolution solution;
    std::vector<GateSolution> candidates;  // distinct eligible solutions by rounded cost
    std::vector<StageRecord> stages;
    long evaluations = 0;
};

GlobalResult optimize_global(const GlobalSearchConfig& config, const TrapConfiguration& trap,
                             const ModeStructure& modes);

/// Nearest integer, ties away from zero.
std::vector<long> round_to_integers(std::span<const double> z);

/// Gate time reachable at f_new given T_G at f_old, using T_G proportional to f^(-2/5).
double extrapolate_gate_time(double gate_time, double f_old, double f_new);

/// Minimum repetition rate, +inf for coincident groups and 0 for fewer than two.
double safe_min_rate(const PulseSequence& seq);

/// Builds and evaluates a solution from finalised scheme parameters.
GateSolution make_solution(const SchemeSpec& scheme, std::vector<double> parameters, double gate_time,
                           const CostModel& model);

}  // namespace fastgate
