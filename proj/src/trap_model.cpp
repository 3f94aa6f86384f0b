#include "fastgate/trap_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fastgate/error.hpp"

namespace fastgate {

namespace {

constexpr double kNewtonTolerance = 1e-13;
constexpr int kNewtonIterations = 200;

// Well centers in units of the length scale.
std::vector<double> well_centers(const TrapConfiguration& c) {
    std::vector<double> centers(c.ion_count, 0.0);
    if (c.architecture == Architecture::MicrotrapArray) {
        const double d = c.well_spacing() / c.length_scale();
        for (int i = 0; i < c.ion_count; ++i) centers[i] = (i - 0.5 * (c.ion_count - 1)) * d;
    }
    return centers;
}

Eigen::VectorXd force(const Eigen::VectorXd& x, const std::vector<double>& centers) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) {
        double fi = -(x[i] - centers[i]);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double r = x[i] - x[j];
            fi += (r > 0 ? 1.0 : -1.0) / (r * r);
        }
        f[i] = fi;
    }
    return f;
}

Eigen::MatrixXd hessian_at(const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double k = 2.0 / std::pow(std::abs(x[i] - x[j]), 3);
            h(i, i) += k;
            h(i, j) -= k;
        }
    }
    return h;
}

bool ordered(const Eigen::VectorXd& x) {
    for (int i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) return false;
    return true;
}

struct Solve {
    Eigen::VectorXd x;
    double residual;
    int iterations;
};

Solve solve_equilibrium(const TrapConfiguration& c) {
    const int n = c.ion_count;
    const auto centers = well_centers(c);
    Eigen::VectorXd x(n);
    if (c.architecture == Architecture::MicrotrapArray) {
        for (int i = 0; i < n; ++i) x[i] = centers[i];
    } else {
        // Uniform chain with the usual n^-0.56 spacing estimate.
        const double spacing = n > 1 ? 2.018 / std::pow(n, 0.559) : 0.0;
        for (int i = 0; i < n; ++i) x[i] = (i - 0.5 * (n - 1)) * spacing;
    }
    Eigen::VectorXd f = force(x, centers);
    double res = f.lpNorm<Eigen::Infinity>();
    int it = 0;
    while (res > kNewtonTolerance && it < kNewtonIterations) {
        ++it;
        const Eigen::VectorXd step = hessian_at(x).ldlt().solve(f);
        double alpha = 1.0;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, alpha *= 0.5) {
            Eigen::VectorXd trial = x + alpha * step;
            if (!ordered(trial)) continue;
            Eigen::VectorXd ft = force(trial, centers);
            const double rt = ft.lpNorm<Eigen::Infinity>();
            if (rt < res || alpha < 1e-12) {
                x = trial;
                f = ft;
                res = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (res > 1e-12) {
        std::ostringstream os;
        os << "equilibrium solve did not converge after " << it << " iterations (residual " << res
           << ")";
        throw TrapModelError(os.str());
    }
    return {x, res, it};
}

}  // namespace

void TrapConfiguration::validate() const {
    if (!(trap_frequency > 0)) throw ConfigError("trap frequency must be positive");
    if (!(ion_mass > 0)) throw ConfigError("ion mass must be positive");
    if (ion_count < 1) throw ConfigError("ion count must be at least 1");
    if (!(mean_occupation >= 0)) throw ConfigError("mean occupation must be non-negative");
    if (!lamb_dicke && !laser_wavenumber)
        throw ConfigError("either the Lamb-Dicke parameter or the laser wavenumber is required");
    if (lamb_dicke && !(*lamb_dicke > 0)) throw ConfigError("Lamb-Dicke parameter must be positive");
    if (laser_wavenumber && !(*laser_wavenumber > 0))
        throw ConfigError("laser wavenumber must be positive");
    if (lamb_dicke && laser_wavenumber) {
        const double derived = *laser_wavenumber * oscillator_length() / std::sqrt(2.0);
        if (std::abs(derived - *lamb_dicke) > 1e-12 * *lamb_dicke) {
            std::ostringstream os;
            os.precision(15);
            os << "Lamb-Dicke parameter " << *lamb_dicke << " inconsistent with wavenumber (gives "
               << derived << ")";
            throw ConfigError(os.str());
        }
    }
    if (chi && !(1.0 + *chi > 0)) throw ConfigError("chi must satisfy 1 + chi > 0");
    if (architecture == Architecture::MicrotrapArray) {
        if (!(inter_trap_distance > 0) && !chi)
            throw ConfigError("microtrap array needs a positive inter-trap distance or chi");
    }
    if (chi && ion_count != 2) throw ConfigError("direct chi specification needs exactly two ions");
    const int a = gate_ion_a(), b = gate_ion_b();
    if (ion_count >= 2 && (a < 0 || b < 0 || a >= ion_count || b >= ion_count || a == b))
        throw ConfigError("gate ions must be two distinct ions of the chain");
}

double TrapConfiguration::effective_lamb_dicke() const {
    if (lamb_dicke) return *lamb_dicke;
    if (laser_wavenumber) return *laser_wavenumber * oscillator_length() / std::sqrt(2.0);
    throw ConfigError("Lamb-Dicke parameter undefined");
}

double TrapConfiguration::length_scale() const {
    const double k = elementary_charge * elementary_charge /
                     (4.0 * std::numbers::pi * vacuum_permittivity * ion_mass * trap_frequency *
                      trap_frequency);
    return std::cbrt(k);
}

double TrapConfiguration::oscillator_length() const {
    return std::sqrt(constants::hbar / (ion_mass * trap_frequency));
}

double TrapConfiguration::coulomb_strength() const {
    const double r = length_scale() / oscillator_length();
    return r * r * r;
}

double TrapConfiguration::well_spacing() const {
    if (architecture != Architecture::MicrotrapArray) return 0.0;
    if (inter_trap_distance > 0) return inter_trap_distance;
    if (chi) return microtrap_spacing_for_chi(*this, *chi);
    throw ConfigError("microtrap well spacing undefined");
}

int TrapConfiguration::gate_ion_a() const {
    return ion_a >= 0 ? ion_a : (ion_count - 1) / 2;
}

int TrapConfiguration::gate_ion_b() const {
    return ion_b >= 0 ? ion_b : (ion_count - 1) / 2 + 1;
}

Equilibrium equilibrium_positions(const TrapConfiguration& config) {
    if (config.ion_count < 1) throw ConfigError("ion count must be at least 1");
    const Solve s = solve_equilibrium(config);
    const double ell = config.length_scale();
    const auto centers = well_centers(config);
    Equilibrium eq;
    eq.residual = s.residual;
    eq.iterations = s.iterations;
    for (int i = 0; i < config.ion_count; ++i) {
        eq.positions.push_back(s.x[i] * ell);
        eq.displacements.push_back((s.x[i] - centers[i]) * ell);
    }
    return eq;
}

Eigen::MatrixXd potential_hessian(const TrapConfiguration& config) {
    return hessian_at(solve_equilibrium(config).x);
}

ModeStructure normal_modes(const TrapConfiguration& config) {
    if (config.chi) {
        ModeStructure m = modes_from_chi(*config.chi, config.trap_frequency);
        if (config.architecture == Architecture::MicrotrapArray) {
            const double ell = config.length_scale();
            for (double x : solve_equilibrium(config).x) m.equilibrium_positions.push_back(x * ell);
        }
        return m;
    }
    const Solve s = solve_equilibrium(config);
    const Eigen::MatrixXd h = hessian_at(s.x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw TrapModelError("Hessian eigendecomposition failed");
    const int n = config.ion_count;
    ModeStructure m;
    m.trap_frequency = config.trap_frequency;
    m.coupling.resize(n, n);
    for (int p = 0; p < n; ++p) {
        const double lambda = es.eigenvalues()[p];
        if (!(lambda > 0)) {
            std::ostringstream os;
            os << "unstable configuration: Hessian eigenvalue " << lambda << " for mode " << p;
            throw TrapModelError(os.str());
        }
        m.frequencies.push_back(std::sqrt(lambda) * config.trap_frequency);
        Eigen::VectorXd v = es.eigenvectors().col(p);
        for (int i = 0; i < n; ++i) {
            if (std::abs(v[i]) > 1e-12) {
                if (v[i] < 0) v = -v;
                break;
            }
        }
        m.coupling.row(p) = v.transpose();
    }
    const double ell = config.length_scale();
    for (int i = 0; i < n; ++i) m.equilibrium_positions.push_back(s.x[i] * ell);
    return m;
}

double chi_from_modes(const ModeStructure& modes) {
    if (modes.mode_count() != 2 || modes.ion_count() != 2)
        throw TrapModelError("chi is defined for two-ion, two-mode structures only");
    // The common mode moves both ions in the same direction.
    const int common = modes.coupling(0, 0) * modes.coupling(0, 1) > 0 ? 0 : 1;
    const int breathing = 1 - common;
    return (modes.frequencies[breathing] - modes.frequencies[common]) / modes.trap_frequency;
}

ModeStructure modes_from_chi(double chi, double trap_frequency) {
    if (!(1.0 + chi > 0)) throw TrapModelError("modes_from_chi requires 1 + chi > 0");
    ModeStructure m;
    m.trap_frequency = trap_frequency;
    const double s = 1.0 / std::sqrt(2.0);
    const double wb = trap_frequency * (1.0 + chi);
    Eigen::RowVector2d common(s, s), breathing(s, -s);
    m.coupling.resize(2, 2);
    if (chi >= 0) {
        m.frequencies = {trap_frequency, wb};
        m.coupling.row(0) = common;
        m.coupling.row(1) = breathing;
    } else {
        m.frequencies = {wb, trap_frequency};
        m.coupling.row(0) = breathing;
        m.coupling.row(1) = common;
    }
    return m;
}

double microtrap_chi(const TrapConfiguration& config, double spacing) {
    TrapConfiguration c = config;
    c.architecture = Architecture::MicrotrapArray;
    c.ion_count = 2;
    c.chi.reset();
    c.inter_trap_distance = spacing;
    return chi_from_modes(normal_modes(c));
}

double microtrap_spacing_for_chi(const TrapConfiguration& config, double chi) {
    if (!(chi > 0)) throw ConfigError("microtrap chi must be positive");
    // chi ~ 2 (ell/d)^3 far apart; bracket around that estimate in log space.
    const double ell = config.length_scale();
    const double guess = ell * std::cbrt(2.0 / chi);
    double lo = 0.5 * guess, hi = 2.0 * guess;
    while (microtrap_chi(config, lo) < chi) lo *= 0.8;
    while (microtrap_chi(config, hi) > chi) hi *= 1.25;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (microtrap_chi(config, mid) > chi) lo = mid; else hi = mid;
    }
    return std::sqrt(lo * hi);
}

}  // namespace fastgate
