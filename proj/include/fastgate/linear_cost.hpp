#pragma once

#include <span>
#include <vector>

#include "fastgate/schemes.hpp"
#include "fastgate/trap_model.hpp"

namespace fastgate {

struct InfidelityBreakdown {
    double phase_mismatch = 0.0;       // |phase| - pi/4, radians
    std::vector<double> displacement;  // Delta P_p per mode
    double total = 0.0;

    /// The truncated expansion is only trusted for small totals.
    bool outside_trust_region() const { return total > 0.1; }
};

/// Mode data entering the truncated cost for one ion pair.
struct CostModel {
    double eta = 0.0;
    std::vector<double> omega;               // omega_p / omega_t
    std::vector<double> phase_coefficient;   // 8 eta^2 b^A b^B / omega
    std::vector<double> displacement_scale;  // 2 eta / sqrt(omega)
    std::vector<double> weight;              // (1/2 + nbar_p)((b^A)^2 + (b^B)^2)

    static CostModel make(const ModeStructure& modes, double eta, const std::vector<double>& nbar,
                          int ion_a, int ion_b);
    int mode_count() const { return static_cast<int>(omega.size()); }
};

/// Cost model for the configuration's gate ions, eta and uniform occupation.
CostModel cost_model(const TrapConfiguration& config, const ModeStructure& modes);

/// Sum over unordered pairs i<j of z_i z_j sin(w |t_i - t_j|); O(N log N).
double phase_sum(std::span<const double> z, std::span<const double> t, double w);

/// Magnitude of sum_k z_k exp(-i w t_k).
double displacement_sum(std::span<const double> z, std::span<const double> t, double w);

double phase_mismatch(std::span<const double> z, std::span<const double> t, const CostModel& m);
double phase_mismatch(const PulseSequence& seq, const ModeStructure& modes, double eta, int ion_a,
                      int ion_b);

double motional_displacement(const PulseSequence& seq, const ModeStructure& modes, double eta, int p);

/// Restoration of an antisymmetric sequence via the sine-only sum; rejects other input.
double antisym_displacement(const PulseSequence& seq, const ModeStructure& modes, double eta, int p);

InfidelityBreakdown truncated_infidelity(std::span<const double> z, std::span<const double> t,
                                         const CostModel& m);
InfidelityBreakdown truncated_infidelity(const PulseSequence& seq, const CostModel& m);
InfidelityBreakdown truncated_infidelity(const PulseSequence& seq, const ModeStructure& modes,
                                         double eta, const std::vector<double>& nbar, int ion_a,
                                         int ion_b);
/// Every pulse pair of the train treated as its own group.
InfidelityBreakdown truncated_infidelity(const KickTrain& train, const CostModel& m);

/// Truncated cost at fixed group times as a function of the group weights z.
/// This is the inner loop of the GPG/APG search.
class FixedTimingCost {
public:
    FixedTimingCost(CostModel model, std::vector<double> times);

    int size() const { return static_cast<int>(times_.size()); }
    int residual_count() const { return 1 + 2 * model_.mode_count(); }
    const CostModel& model() const { return model_; }
    const std::vector<double>& times() const { return times_; }

    double value(std::span<const double> z) const;
    /// grad may be empty.
    double value_and_gradient(std::span<const double> z, std::span<double> grad) const;
    InfidelityBreakdown breakdown(std::span<const double> z) const;
    /// r with cost = |r|^2; jacobian (row-major, residual_count x size) may be empty.
    void residuals(std::span<const double> z, std::span<double> r, std::span<double> jacobian) const;

private:
    CostModel model_;
    std::vector<double> times_;
    std::vector<int> order_;               // indices sorted by time
    std::vector<double> cos_, sin_;        // [p * n + sorted position]
};

/// Costs of many weight vectors at shared timings; OpenMP-parallel over candidates.
std::vector<double> evaluate_batch(const FixedTimingCost& cost,
                                   const std::vector<std::vector<double>>& candidates);

}  // namespace fastgate
