#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fastgate/global_opt.hpp"

namespace fastgate {

inline constexpr double kDefaultRegimeCutoff = 2.0;

struct PulseErrorSpec {
    double transition_error = 0.0;  // epsilon, probability of an errant rotation per pulse
    long pulse_pairs = 0;           // N_p
    double ideal_fidelity = 1.0;    // F_0

    void validate() const;
};

struct DegradedFidelity {
    double fidelity = 1.0;
    double infidelity = 0.0;
    bool in_regime = true;  // N_p * epsilon within the cutoff
};

/// True when N_p * epsilon does not exceed the cutoff.
bool in_regime(const PulseErrorSpec& spec, double cutoff = kDefaultRegimeCutoff);

/// F = |1 - 2 N eps + N^2 eps^2| F_0, flagged when outside the regime.
DegradedFidelity degraded_fidelity(const PulseErrorSpec& spec, double cutoff = kDefaultRegimeCutoff);

/// epsilon = (pi^2 / 8) dI/I.
double epsilon_from_intensity_noise(double relative_fluctuation);

struct BudgetRow {
    double gate_time_periods = 0.0;
    double ideal_infidelity = 0.0;
    long pulse_pairs = 0;
    std::vector<std::optional<double>> infidelity;  // one per epsilon; empty outside the regime
};

struct BudgetTable {
    std::vector<double> epsilons;
    double cutoff = kDefaultRegimeCutoff;
    std::vector<BudgetRow> rows;

    std::string to_csv() const;
    std::string to_text() const;
};

BudgetRow budget_row(double gate_time_periods, double ideal_infidelity, long pulse_pairs,
                     const std::vector<double>& epsilons, double cutoff = kDefaultRegimeCutoff);

/// Table rows from solutions; F_0 is taken from the truncated cost unless overridden.
BudgetTable error_budget_table(const std::vector<GateSolution>& solutions, const std::vector<double>& epsilons,
                               double cutoff = kDefaultRegimeCutoff,
                               const std::vector<double>& ideal_infidelities = {});

}  // namespace fastgate
