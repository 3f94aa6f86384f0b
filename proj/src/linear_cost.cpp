#include "fastgate/linear_cost.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "fastgate/error.hpp"

namespace fastgate {

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4.0;

std::vector<int> time_order(std::span<const double> t) {
    std::vector<int> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return t[a] < t[b]; });
    return order;
}

struct ModeSums {
    double phase;               // sum_{i<j} z_i z_j sin(w (t_j - t_i)) over time-sorted pairs
    std::complex<double> disp;  // sum_k z_k exp(-i w t_k)
};

ModeSums mode_sums(std::span<const double> z, std::span<const double> t, const std::vector<int>& order,
                   double w) {
    // With u_j = exp(i w t_j) and A_j = sum_{i<j} z_i u_i, the pair sum is sum_j z_j Im(u_j conj(A_j)).
    double ar = 0.0, ai = 0.0, phase = 0.0, dr = 0.0, di = 0.0;
    for (int k : order) {
        const double c = std::cos(w * t[k]), s = std::sin(w * t[k]);
        phase += z[k] * (s * ar - c * ai);
        ar += z[k] * c;
        ai += z[k] * s;
        dr += z[k] * c;
        di -= z[k] * s;
    }
    return {phase, {dr, di}};
}

void check_lengths(std::span<const double> z, std::span<const double> t) {
    if (z.size() != t.size()) throw SchemeError("pulse weights and times differ in length");
}

}  // namespace

CostModel CostModel::make(const ModeStructure& modes, double eta, const std::vector<double>& nbar,
                          int a, int b) {
    const int P = modes.mode_count();
    if (a < 0 || b < 0 || a >= modes.ion_count() || b >= modes.ion_count() || a == b)
        throw ConfigError("gate ions out of range");
    if (static_cast<int>(nbar.size()) != P) throw ConfigError("need one mean occupation per mode");
    CostModel m;
    m.eta = eta;
    for (int p = 0; p < P; ++p) {
        if (nbar[p] < 0) throw ConfigError("mean occupation must be non-negative");
        const double w = modes.ratio(p);
        const double ba = modes.coupling(p, a), bb = modes.coupling(p, b);
        m.omega.push_back(w);
        m.phase_coefficient.push_back(8.0 * eta * eta * ba * bb / w);
        m.displacement_scale.push_back(2.0 * eta / std::sqrt(w));
        m.weight.push_back((0.5 + nbar[p]) * (ba * ba + bb * bb));
    }
    return m;
}

CostModel cost_model(const TrapConfiguration& config, const ModeStructure& modes) {
    return CostModel::make(modes, config.effective_lamb_dicke(),
                           std::vector<double>(modes.mode_count(), config.mean_occupation),
                           config.gate_ion_a(), config.gate_ion_b());
}

double phase_sum(std::span<const double> z, std::span<const double> t, double w) {
    check_lengths(z, t);
    return mode_sums(z, t, time_order(t), w).phase;
}

double displacement_sum(std::span<const double> z, std::span<const double> t, double w) {
    check_lengths(z, t);
    return std::abs(mode_sums(z, t, time_order(t), w).disp);
}

InfidelityBreakdown truncated_infidelity(std::span<const double> z, std::span<const double> t,
                                         const CostModel& m) {
    check_lengths(z, t);
    const auto order = time_order(t);
    double y = 0.0, motion = 0.0;
    InfidelityBreakdown out;
    for (int p = 0; p < m.mode_count(); ++p) {
        const ModeSums s = mode_sums(z, t, order, m.omega[p]);
        y += m.phase_coefficient[p] * s.phase;
        const double dp = m.displacement_scale[p] * std::abs(s.disp);
        out.displacement.push_back(dp);
        motion += m.weight[p] * dp * dp;
    }
    out.phase_mismatch = std::abs(y) - kQuarterPi;
    out.total = (2.0 / 3.0) * out.phase_mismatch * out.phase_mismatch + (4.0 / 3.0) * motion;
    return out;
}

double phase_mismatch(std::span<const double> z, std::span<const double> t, const CostModel& m) {
    return truncated_infidelity(z, t, m).phase_mismatch;
}

InfidelityBreakdown truncated_infidelity(const PulseSequence& seq, const CostModel& m) {
    const auto z = seq.z_values();
    const auto t = seq.times();
    return truncated_infidelity(z, t, m);
}

InfidelityBreakdown truncated_infidelity(const PulseSequence& seq, const ModeStructure& modes,
                                         double eta, const std::vector<double>& nbar, int a, int b) {
    return truncated_infidelity(seq, CostModel::make(modes, eta, nbar, a, b));
}

InfidelityBreakdown truncated_infidelity(const KickTrain& train, const CostModel& m) {
    std::vector<double> z(train.size()), t(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) {
        z[k] = train.signs[k];
        t[k] = train.time(k);
    }
    return truncated_infidelity(z, t, m);
}

double phase_mismatch(const PulseSequence& seq, const ModeStructure& modes, double eta, int a,
                      int b) {
    return truncated_infidelity(seq, CostModel::make(modes, eta,
                                                     std::vector<double>(modes.mode_count(), 0.0), a, b))
        .phase_mismatch;
}

double motional_displacement(const PulseSequence& seq, const ModeStructure& modes, double eta,
                             int p) {
    if (p < 0 || p >= modes.mode_count()) throw ConfigError("mode index out of range");
    const double w = modes.ratio(p);
    return 2.0 * eta / std::sqrt(w) * displacement_sum(seq.z_values(), seq.times(), w);
}

double antisym_displacement(const PulseSequence& seq, const ModeStructure& modes, double eta,
                            int p) {
    if (p < 0 || p >= modes.mode_count()) throw ConfigError("mode index out of range");
    if (!is_antisymmetric(seq)) throw SchemeError("sequence is not antisymmetric in time");
    const double w = modes.ratio(p);
    double s = 0.0;
    for (const auto& g : seq.groups) s += static_cast<double>(g.z) * std::sin(w * g.time);
    return 2.0 * eta / std::sqrt(w) * std::abs(s);
}

FixedTimingCost::FixedTimingCost(CostModel model, std::vector<double> times)
    : model_(std::move(model)), times_(std::move(times)) {
    order_ = time_order(times_);
    const int n = size();
    const int P = model_.mode_count();
    cos_.resize(static_cast<std::size_t>(P) * n);
    sin_.resize(cos_.size());
    for (int p = 0; p < P; ++p) {
        for (int j = 0; j < n; ++j) {
            const double a = model_.omega[p] * times_[order_[j]];
            cos_[p * n + j] = std::cos(a);
            sin_[p * n + j] = std::sin(a);
        }
    }
}

double FixedTimingCost::value(std::span<const double> z) const {
    return value_and_gradient(z, {});
}

double FixedTimingCost::value_and_gradient(std::span<const double> z, std::span<double> grad) const {
    const int n = size();
    const int P = model_.mode_count();
    double y = 0.0, motion = 0.0;
    // Per-mode scratch kept on the stack for the usual small mode counts.
    constexpr int kMaxModes = 16;
    double dre[kMaxModes], dim[kMaxModes];
    std::vector<double> dre_heap, dim_heap;
    double* Dre = dre;
    double* Dim = dim;
    if (P > kMaxModes) {
        dre_heap.resize(P);
        dim_heap.resize(P);
        Dre = dre_heap.data();
        Dim = dim_heap.data();
    }
    for (int p = 0; p < P; ++p) {
        const double* c = &cos_[p * n];
        const double* s = &sin_[p * n];
        double ar = 0.0, ai = 0.0, ph = 0.0;
        for (int j = 0; j < n; ++j) {
            const double zj = z[order_[j]];
            ph += zj * (s[j] * ar - c[j] * ai);
            ar += zj * c[j];
            ai += zj * s[j];
        }
        y += model_.phase_coefficient[p] * ph;
        Dre[p] = ar;
        Dim[p] = -ai;
        const double sc = model_.displacement_scale[p];
        motion += model_.weight[p] * sc * sc * (ar * ar + ai * ai);
    }
    const double dphi = std::abs(y) - kQuarterPi;
    const double total = (2.0 / 3.0) * dphi * dphi + (4.0 / 3.0) * motion;
    if (grad.empty()) return total;

    std::fill(grad.begin(), grad.end(), 0.0);
    const double sgn = y >= 0 ? 1.0 : -1.0;
    for (int p = 0; p < P; ++p) {
        const double* c = &cos_[p * n];
        const double* s = &sin_[p * n];
        const double kphase = (4.0 / 3.0) * dphi * sgn * model_.phase_coefficient[p];
        const double sc = model_.displacement_scale[p];
        const double kmotion = (8.0 / 3.0) * model_.weight[p] * sc * sc;
        // Forward accumulator A (earlier groups) and backward accumulator B (later groups).
        double br = Dre[p], bi = -Dim[p];
        double ar = 0.0, ai = 0.0;
        for (int j = 0; j < n; ++j) {
            const int k = order_[j];
            const double zk = z[k];
            br -= zk * c[j];
            bi -= zk * s[j];
            const double dS = (s[j] * ar - c[j] * ai) + (bi * c[j] - br * s[j]);
            grad[k] += kphase * dS + kmotion * (Dre[p] * c[j] - Dim[p] * s[j]);
            ar += zk * c[j];
            ai += zk * s[j];
        }
    }
    return total;
}

InfidelityBreakdown FixedTimingCost::breakdown(std::span<const double> z) const {
    return truncated_infidelity(z, times_, model_);
}

void FixedTimingCost::residuals(std::span<const double> z, std::span<double> r,
                                std::span<double> jac) const {
    const int n = size();
    const int P = model_.mode_count();
    double y = 0.0;
    if (!jac.empty()) std::fill(jac.begin(), jac.end(), 0.0);
    for (int p = 0; p < P; ++p) {
        const double* c = &cos_[p * n];
        const double* s = &sin_[p * n];
        double ar = 0.0, ai = 0.0, ph = 0.0;
        for (int j = 0; j < n; ++j) {
            const double zj = z[order_[j]];
            ph += zj * (s[j] * ar - c[j] * ai);
            ar += zj * c[j];
            ai += zj * s[j];
        }
        y += model_.phase_coefficient[p] * ph;
        const double k = std::sqrt((4.0 / 3.0) * model_.weight[p]) * model_.displacement_scale[p];
        r[1 + 2 * p] = k * ar;
        r[2 + 2 * p] = -k * ai;
        if (!jac.empty()) {
            for (int j = 0; j < n; ++j) {
                jac[(1 + 2 * p) * n + order_[j]] = k * c[j];
                jac[(2 + 2 * p) * n + order_[j]] = -k * s[j];
            }
        }
    }
    const double dphi = std::abs(y) - kQuarterPi;
    r[0] = std::sqrt(2.0 / 3.0) * dphi;
    if (jac.empty()) return;
    const double sgn = y >= 0 ? 1.0 : -1.0;
    for (int p = 0; p < P; ++p) {
        const double* c = &cos_[p * n];
        const double* s = &sin_[p * n];
        const double kp = std::sqrt(2.0 / 3.0) * sgn * model_.phase_coefficient[p];
        double tr = 0.0, ti = 0.0;
        for (int j = 0; j < n; ++j) {
            const double zj = z[order_[j]];
            tr += zj * c[j];
            ti += zj * s[j];
        }
        double br = tr, bi = ti, ar = 0.0, ai = 0.0;
        for (int j = 0; j < n; ++j) {
            const int k = order_[j];
            br -= z[k] * c[j];
            bi -= z[k] * s[j];
            jac[k] += kp * ((s[j] * ar - c[j] * ai) + (bi * c[j] - br * s[j]));
            ar += z[k] * c[j];
            ai += z[k] * s[j];
        }
    }
}

std::vector<double> evaluate_batch(const FixedTimingCost& cost,
                                   const std::vector<std::vector<double>>& candidates) {
    std::vector<double> out(candidates.size());
    const long n = static_cast<long>(candidates.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) out[i] = cost.value(candidates[i]);
    return out;
}

}  // namespace fastgate
