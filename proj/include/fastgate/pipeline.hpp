#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fastgate/error.hpp"
#include "fastgate/error_model.hpp"
#include "fastgate/global_opt.hpp"
#include "fastgate/local_opt.hpp"
#include "fastgate/ode_dynamics.hpp"
#include "fastgate/trap_model.hpp"

namespace fastgate {

struct RunManifest {
    TrapConfiguration trap;
    GlobalSearchConfig global;   // gate time in units of 1/omega_t
    LocalSearchConfig local;     // rate is set per repetition rate
    bool refine = true;
    int refine_candidates = 1;   // best global candidates handed to the local search
    std::vector<double> repetition_rates_hz;
    std::vector<double> epsilons;
    double regime_cutoff = kDefaultRegimeCutoff;
    std::string output_dir;
    std::uint64_t seed = 1;
    bool export_trajectories = false;

    void validate() const;
    /// Repetition rate in pulse pairs per unit time.
    double rate(double hertz) const { return hertz / trap.trap_frequency; }
};

struct RateResult {
    double repetition_rate_hz = 0.0;
    double rate = 0.0;
    std::optional<OdeInfidelity> snapped;  // global solution on the grid; absent if it does not fit
    std::optional<GateSolution> local;
    std::optional<OdeInfidelity> local_ode;
    std::optional<OdeInfidelity> local_input;
    std::vector<RefinementStep> log;
    long local_evaluations = 0;
    int local_candidate = -1;              // index into the global candidates
    std::string note;
};

struct ResultRecord {
    RunManifest manifest;
    ModeStructure modes;
    std::optional<GateSolution> global;
    std::vector<GateSolution> candidates;
    std::vector<StageRecord> stages;
    std::optional<OdeInfidelity> linear_ode;  // instantaneous groups, linearized Coulomb force
    std::optional<OdeInfidelity> full_ode;    // instantaneous groups, full Coulomb force
    std::vector<RateResult> rates;
    std::optional<BudgetTable> budget;
    std::vector<std::string> notes;
    std::string failed_stage;
    std::string failure;

    bool complete() const { return failed_stage.empty(); }
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct RunOutcome {
    ResultRecord record;
    std::vector<StageTiming> timing;
};

/// Runs every stage in order. Artifacts are written to manifest.output_dir when it is
/// non-empty, including after a failure; the failing stage's error is rethrown.
RunOutcome run_pipeline(const RunManifest& manifest);

/// Exit status for a failed stage.
int exit_code(Stage stage);

}  // namespace fastgate
