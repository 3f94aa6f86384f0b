#include "fastgate/ode_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "fastgate/error.hpp"

namespace fastgate {

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4.0;
constexpr std::array<double, 4> kIdeal{kQuarterPi, -kQuarterPi, -kQuarterPi, kQuarterPi};

struct Y {
    double d1, d2, v1, v2, phi;
};

Y derivative(const TwoIonSystem& sys, const Y& y, double offset) {
    double f1, f2;
    sys.force(y.d1, y.d2, f1, f2);
    const double kinetic = 0.5 * (y.v1 * y.v1 + y.v2 * y.v2);
    return {y.v1, y.v2, f1, f2, kinetic - sys.potential(y.d1, y.d2) - offset};
}

Y axpy(const Y& y, double a, const Y& k) {
    return {y.d1 + a * k.d1, y.d2 + a * k.d2, y.v1 + a * k.v1, y.v2 + a * k.v2, y.phi + a * k.phi};
}

Y rk4_step(const TwoIonSystem& sys, const Y& y, double h, double offset) {
    const Y k1 = derivative(sys, y, offset);
    const Y k2 = derivative(sys, axpy(y, 0.5 * h, k1), offset);
    const Y k3 = derivative(sys, axpy(y, 0.5 * h, k2), offset);
    const Y k4 = derivative(sys, axpy(y, h, k3), offset);
    const double c = h / 6.0;
    return {y.d1 + c * (k1.d1 + 2 * k2.d1 + 2 * k3.d1 + k4.d1),
            y.d2 + c * (k1.d2 + 2 * k2.d2 + 2 * k3.d2 + k4.d2),
            y.v1 + c * (k1.v1 + 2 * k2.v1 + 2 * k3.v1 + k4.v1),
            y.v2 + c * (k1.v2 + 2 * k2.v2 + 2 * k3.v2 + k4.v2),
            y.phi + c * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi)};
}

double energy(const TwoIonSystem& sys, const Y& y) {
    return 0.5 * (y.v1 * y.v1 + y.v2 * y.v2) + sys.potential(y.d1, y.d2);
}

std::array<double, 2> basis_signs(int basis) {
    // +1 for qubit |0>, -1 for |1>; ion A carries the first qubit.
    return {(basis & 2) ? -1.0 : 1.0, (basis & 1) ? -1.0 : 1.0};
}

TrajectoryState to_state(const TwoIonSystem& sys, double t, const Y& y) {
    const auto eq = sys.equilibrium();
    return {t, {eq[0] + y.d1, eq[1] + y.d2}, {y.v1, y.v2}, y.phi};
}

// basis < 0 integrates the kick-free reference.
Trajectory integrate(const TwoIonSystem& sys, std::span<const Impulse> kicks, int basis, double begin,
                     double end, double h, const SimulationOptions& opt) {
    Trajectory tr;
    Y y{0, 0, 0, 0, 0};
    double t = begin;
    const double dv = sys.kick_velocity(opt.kick_factor);
    const auto s = basis_signs(std::max(basis, 0));
    double drift = 0.0, scale = 0.0;
    if (opt.record) tr.history.push_back(to_state(sys, t, y));

    auto evolve_to = [&](double target) {
        const double span = target - t;
        if (span <= 0) return;
        const long n = std::max<long>(1, static_cast<long>(std::ceil(span / h - 1e-9)));
        const double dt = span / n;
        const double e0 = energy(sys, y);
        for (long i = 0; i < n; ++i) {
            y = rk4_step(sys, y, dt, opt.potential_offset);
            if (opt.record) tr.history.push_back(to_state(sys, t + (i + 1) * dt, y));
        }
        tr.steps += n;
        t = target;
        const double e1 = energy(sys, y);
        drift += std::abs(e1 - e0);
        scale = std::max({scale, std::abs(e0), std::abs(e1)});
    };

    for (const Impulse& k : kicks) {
        evolve_to(k.time);
        if (basis >= 0) {
            y.v1 += s[0] * k.pairs * dv;
            y.v2 += s[1] * k.pairs * dv;
            if (opt.record) tr.history.push_back(to_state(sys, t, y));
        }
    }
    evolve_to(end);
    tr.final = to_state(sys, t, y);
    const double periods = (end - begin) / two_pi;
    tr.energy_drift = (scale > 0 && periods > 0) ? drift / scale / periods : 0.0;
    return tr;
}

}  // namespace

std::vector<Impulse> impulses(const KickTrain& train) {
    std::vector<Impulse> out;
    out.reserve(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) out.push_back({train.time(k), static_cast<double>(train.signs[k])});
    return out;
}

std::vector<Impulse> impulses(const PulseSequence& seq) {
    std::vector<Impulse> out;
    for (const auto& g : seq.groups) out.push_back({g.time, static_cast<double>(g.z)});
    std::stable_sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.time < b.time; });
    return out;
}

std::vector<Impulse> unsnapped_impulses(const PulseSequence& seq, double rate) {
    if (!(rate > 0)) throw OdeError("repetition rate must be positive");
    std::vector<Impulse> out;
    for (const auto& g : seq.groups) {
        const long n = std::labs(g.z);
        const double sign = g.z > 0 ? 1.0 : -1.0;
        for (long m = 0; m < n; ++m)
            out.push_back({g.time + (m - 0.5 * static_cast<double>(n - 1)) / rate, sign});
    }
    std::stable_sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.time < b.time; });
    return out;
}

TwoIonSystem::TwoIonSystem(const TrapConfiguration& trap, CoulombModel model) : model_(model) {
    trap.validate();
    if (trap.ion_count != 2) throw OdeError("the classical simulation covers two-ion systems only");
    if (trap.chi && trap.architecture == Architecture::PaulTrap)
        throw OdeError("directly specified chi without geometry cannot be simulated");
    const Equilibrium eq = equilibrium_positions(trap);
    const double a0 = trap.oscillator_length();
    equilibrium_ = {eq.positions[0] / a0, eq.positions[1] / a0};
    separation_ = equilibrium_[1] - equilibrium_[0];
    coulomb_ = trap.coulomb_strength();
    spring_ = 2.0 * coulomb_ / (separation_ * separation_ * separation_);
    eta_ = trap.effective_lamb_dicke();
}

double TwoIonSystem::potential(double d1, double d2) const {
    const double dr = d2 - d1;
    const double harmonic = 0.5 * (d1 * d1 + d2 * d2);
    if (model_ == CoulombModel::Linearized) return harmonic + 0.5 * spring_ * dr * dr;
    // C/r - C/r0 plus the linear trap term, combined to avoid cancellation.
    const double r = separation_ + dr;
    return harmonic + coulomb_ * dr * dr / (r * separation_ * separation_);
}

void TwoIonSystem::force(double d1, double d2, double& f1, double& f2) const {
    const double dr = d2 - d1;
    double pull;
    if (model_ == CoulombModel::Linearized) {
        pull = spring_ * dr;
    } else {
        const double r = separation_ + dr;
        pull = coulomb_ * dr * (r + separation_) / (r * r * separation_ * separation_);
    }
    f1 = -d1 + pull;
    f2 = -d2 - pull;
}

TrajectoryState apply_kick(const TrajectoryState& state, double pairs, BasisState basis,
                           double kick_velocity) {
    const auto s = basis_signs(static_cast<int>(basis));
    TrajectoryState out = state;
    out.v[0] += s[0] * pairs * kick_velocity;
    out.v[1] += s[1] * pairs * kick_velocity;
    return out;
}

TrajectorySet simulate_gate(std::span<const Impulse> kicks_in, const TrapConfiguration& trap,
                            const SimulationOptions& opt) {
    if (!(opt.step > 0)) throw OdeError("integration step must be positive");
    const TwoIonSystem sys(trap, opt.coulomb);
    std::vector<Impulse> kicks(kicks_in.begin(), kicks_in.end());
    std::stable_sort(kicks.begin(), kicks.end(), [](auto& a, auto& b) { return a.time < b.time; });
    double begin = kicks.empty() ? 0.0 : kicks.front().time;
    double end = kicks.empty() ? 0.0 : kicks.back().time;
    if (opt.begin) {
        if (!kicks.empty() && *opt.begin > begin) throw OdeError("simulation begins after the first kick");
        begin = *opt.begin;
    }
    if (opt.end) end = std::max(end, *opt.end);
    end = std::max(end, begin);

    TrajectorySet set;
    set.equilibrium = sys.equilibrium();
    set.begin = begin;
    set.end = end;
    double h = opt.step;
    for (int level = 0;; ++level, h *= 0.5) {
        std::array<Trajectory, 5> out;
#pragma omp parallel for schedule(static) if (opt.parallel)
        for (int b = 0; b < 5; ++b) out[b] = integrate(sys, kicks, b < 4 ? b : -1, begin, end, h, opt);
        double worst = 0.0;
        for (const auto& t : out) worst = std::max(worst, t.energy_drift);
        if (worst <= opt.drift_tolerance || level >= opt.max_refinements) {
            if (worst > opt.drift_tolerance) {
                std::ostringstream os;
                os << "energy drift " << worst << " per trap period exceeds tolerance after "
                   << level << " step refinements";
                throw OdeError(os.str());
            }
            for (int b = 0; b < 4; ++b) set.basis[b] = std::move(out[b]);
            set.reference = std::move(out[4]);
            set.step = h;
            set.refinements = level;
            return set;
        }
    }
}

TrajectorySet simulate_gate(const KickTrain& train, const TrapConfiguration& trap,
                            const SimulationOptions& options) {
    const auto k = impulses(train);
    return simulate_gate(k, trap, options);
}

TrajectorySet simulate_sequence(const PulseSequence& seq, const TrapConfiguration& trap,
                                SimulationOptions options) {
    const double end = seq.window_begin + seq.gate_time;
    options.end = options.end ? std::max(*options.end, end) : end;
    const auto k = impulses(seq);
    return simulate_gate(k, trap, options);
}

TrajectorySet simulate_sequence(const PulseSequence& seq, double rate, const TrapConfiguration& trap,
                                SimulationOptions options) {
    const double end = seq.window_begin + seq.gate_time;
    options.end = options.end ? std::max(*options.end, end) : end;
    return simulate_gate(expand_to_kick_train(seq, rate), trap, options);
}

OdeResiduals ode_residuals(const TrajectorySet& set) {
    OdeResiduals r;
    const auto& ref = set.reference.final;
    for (int b = 0; b < 4; ++b) {
        const auto& f = set.basis[b].final;
        double boundary = 0.0;
        for (int i = 0; i < 2; ++i) {
            r.dx[b][i] = f.x[i] - ref.x[i];
            r.dv[b][i] = f.v[i] - ref.v[i];
            boundary += r.dx[b][i] * r.dv[b][i];
        }
        r.phase[b] = f.phase - 0.5 * boundary;
    }
    return r;
}

double ode_phase_mismatch(const OdeResiduals& r) {
    double best = std::numeric_limits<double>::infinity();
    for (double sign : {1.0, -1.0}) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int b = 0; b < 4; ++b) {
            const double res = r.phase[b] - sign * kIdeal[b];
            lo = std::min(lo, res);
            hi = std::max(hi, res);
        }
        best = std::min(best, 0.5 * (hi - lo));
    }
    return best;
}

double ode_phase_mismatch(const TrajectorySet& set) { return ode_phase_mismatch(ode_residuals(set)); }

OdeInfidelity ode_infidelity(const OdeResiduals& r, double nbar, Aggregation aggregation) {
    OdeInfidelity out;
    out.mean_occupation = nbar;
    out.aggregation = aggregation;
    out.phase_mismatch = ode_phase_mismatch(r);
    std::array<double, 2> agg{0.0, 0.0};
    for (int b = 0; b < 4; ++b) {
        for (int i = 0; i < 2; ++i) {
            const double p2 = 0.5 * (r.dx[b][i] * r.dx[b][i] + r.dv[b][i] * r.dv[b][i]);
            out.per_basis[b][i] = std::sqrt(p2);
            if (aggregation == Aggregation::WorstCase) agg[i] = std::max(agg[i], p2);
            else agg[i] += 0.25 * p2;
        }
    }
    out.displacement = {std::sqrt(agg[0]), std::sqrt(agg[1])};
    out.total = (2.0 / 3.0) * out.phase_mismatch * out.phase_mismatch +
                (4.0 / 3.0) * (0.5 + nbar) * (agg[0] + agg[1]);
    return out;
}

OdeInfidelity ode_infidelity(const TrajectorySet& set, double nbar, Aggregation aggregation) {
    return ode_infidelity(ode_residuals(set), nbar, aggregation);
}

double ode_motional_displacement(const TrajectorySet& set, int ion) {
    if (ion < 0 || ion > 1) throw OdeError("ion index must be 0 or 1");
    return ode_infidelity(set, 0.0).displacement[ion];
}

}  // namespace fastgate
