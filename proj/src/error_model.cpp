#include "fastgate/error_model.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "fastgate/error.hpp"
#include "fastgate/units.hpp"

namespace fastgate {

void PulseErrorSpec::validate() const {
    if (!(transition_error >= 0.0 && transition_error < 1.0))
        throw ErrorModelError("transition error must lie in [0, 1)");
    if (pulse_pairs < 1) throw ErrorModelError("pulse pair count must be positive");
    if (!(ideal_fidelity >= 0.0 && ideal_fidelity <= 1.0))
        throw ErrorModelError("ideal fidelity must lie in [0, 1]");
}

bool in_regime(const PulseErrorSpec& spec, double cutoff) {
    return static_cast<double>(spec.pulse_pairs) * spec.transition_error <= cutoff;
}

DegradedFidelity degraded_fidelity(const PulseErrorSpec& spec, double cutoff) {
    spec.validate();
    const double ne = static_cast<double>(spec.pulse_pairs) * spec.transition_error;
    DegradedFidelity out;
    out.fidelity = std::abs(1.0 - 2.0 * ne + ne * ne) * spec.ideal_fidelity;
    // 1 - F written to keep precision when F_0 is close to one.
    const double loss = 2.0 * ne - ne * ne;
    out.infidelity = (1.0 - spec.ideal_fidelity) + spec.ideal_fidelity * loss;
    out.in_regime = in_regime(spec, cutoff);
    return out;
}

double epsilon_from_intensity_noise(double relative_fluctuation) {
    if (!(relative_fluctuation >= 0.0)) throw ErrorModelError("relative intensity fluctuation must be non-negative");
    return std::numbers::pi * std::numbers::pi / 8.0 * relative_fluctuation;
}

BudgetRow budget_row(double gate_time_periods, double ideal_infidelity, long pulse_pairs,
                     const std::vector<double>& epsilons, double cutoff) {
    BudgetRow row;
    row.gate_time_periods = gate_time_periods;
    row.ideal_infidelity = ideal_infidelity;
    row.pulse_pairs = pulse_pairs;
    for (double eps : epsilons) {
        const DegradedFidelity d = degraded_fidelity({eps, pulse_pairs, 1.0 - ideal_infidelity}, cutoff);
        if (d.in_regime) row.infidelity.emplace_back(d.infidelity);
        else row.infidelity.emplace_back(std::nullopt);
    }
    return row;
}

BudgetTable error_budget_table(const std::vector<GateSolution>& solutions, const std::vector<double>& epsilons,
                               double cutoff, const std::vector<double>& ideal_infidelities) {
    if (!ideal_infidelities.empty() && ideal_infidelities.size() != solutions.size())
        throw ErrorModelError("one ideal infidelity per solution is required");
    BudgetTable t;
    t.epsilons = epsilons;
    t.cutoff = cutoff;
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        const GateSolution& s = solutions[i];
        const double f0 = ideal_infidelities.empty() ? s.breakdown.total : ideal_infidelities[i];
        const double periods = time_to_periods(s.sequence.gate_time);
        t.rows.push_back(budget_row(periods, f0, s.sequence.total_pulse_pairs(), epsilons, cutoff));
    }
    return t;
}

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string BudgetTable::to_csv() const {
    std::ostringstream os;
    os << "gate_time_periods,ideal_infidelity,pulse_pairs";
    for (double e : epsilons) os << ",eps_" << sci(e);
    os << '\n';
    os.precision(17);
    for (const auto& r : rows) {
        os << r.gate_time_periods << ',' << r.ideal_infidelity << ',' << r.pulse_pairs;
        for (const auto& c : r.infidelity) {
            os << ',';
            if (c) os << *c;
        }
        os << '\n';
    }
    return os.str();
}

std::string BudgetTable::to_text() const {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> head{"T_G", "1-F0", "N"};
    for (double e : epsilons) head.push_back("eps=" + sci(e));
    cells.push_back(head);
    for (const auto& r : rows) {
        std::vector<std::string> line{fixed(r.gate_time_periods), sci(r.ideal_infidelity), std::to_string(r.pulse_pairs)};
        for (const auto& c : r.infidelity) line.push_back(c ? sci(*c) : "");
        cells.push_back(line);
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& line : cells)
        for (std::size_t j = 0; j < line.size(); ++j) width[j] = std::max(width[j], line[j].size());
    std::ostringstream os;
    for (const auto& line : cells) {
        std::string text;
        for (std::size_t j = 0; j < line.size(); ++j) {
            if (j) text += "  ";
            text += line[j] + std::string(width[j] - line[j].size(), ' ');
        }
        os << text.substr(0, text.find_last_not_of(' ') + 1) << '\n';
    }
    return os.str();
}

}  // namespace fastgate
