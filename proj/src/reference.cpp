#include "fastgate/reference.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "fastgate/error.hpp"

namespace fastgate::reference {

double phase_sum(std::span<const double> z, std::span<const double> t, double w) {
    if (z.size() != t.size()) throw SchemeError("weights and times differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = i + 1; j < z.size(); ++j) s += z[i] * z[j] * std::sin(w * std::abs(t[i] - t[j]));
    return s;
}

InfidelityBreakdown truncated_infidelity(std::span<const double> z, std::span<const double> t,
                                         const CostModel& m) {
    InfidelityBreakdown out;
    double y = 0.0, motion = 0.0;
    for (int p = 0; p < m.mode_count(); ++p) {
        y += m.phase_coefficient[p] * phase_sum(z, t, m.omega[p]);
        std::complex<double> d;
        for (std::size_t k = 0; k < z.size(); ++k) d += z[k] * std::polar(1.0, -m.omega[p] * t[k]);
        const double dp = m.displacement_scale[p] * std::abs(d);
        out.displacement.push_back(dp);
        motion += m.weight[p] * dp * dp;
    }
    out.phase_mismatch = std::abs(y) - std::numbers::pi / 4.0;
    out.total = (2.0 / 3.0) * out.phase_mismatch * out.phase_mismatch + (4.0 / 3.0) * motion;
    return out;
}

std::vector<double> evaluate_batch(const FixedTimingCost& cost,
                                   const std::vector<std::vector<double>>& candidates) {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(cost.value(c));
    return out;
}

TrajectorySet simulate_sequence(const PulseSequence& seq, const TrapConfiguration& trap,
                                SimulationOptions options) {
    options.parallel = false;
    return fastgate::simulate_sequence(seq, trap, options);
}

GlobalResult optimize_global(GlobalSearchConfig config, const TrapConfiguration& trap,
                             const ModeStructure& modes) {
    config.parallel = false;
    return fastgate::optimize_global(config, trap, modes);
}

LocalResult optimize_local(const GateSolution& solution, const TrapConfiguration& trap,
                           LocalSearchConfig config) {
    config.parallel = false;
    config.simulation.parallel = false;
    return fastgate::optimize_local(solution, trap, config);
}

}  // namespace fastgate::reference
