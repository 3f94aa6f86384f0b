// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Criteria can be selected by number: `fastgate_acceptance 3 7`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fastgate/error_model.hpp"
#include "fastgate/global_opt.hpp"
#include "fastgate/linear_cost.hpp"
#include "fastgate/local_opt.hpp"
#include "fastgate/ode_dynamics.hpp"
#include "fastgate/trap_model.hpp"
#include "oracles.hpp"

using namespace fastgate;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

TrapConfiguration paul(int ions = 2) {
    TrapConfiguration t;
    t.ion_count = ions;
    return t;
}

TrapConfiguration microtrap() {
    TrapConfiguration t;
    t.architecture = Architecture::MicrotrapArray;
    t.chi = 1.8e-4;
    return t;
}

Outcome mode_structure() {
    const double chi_paul = chi_from_modes(normal_modes(paul()));
    TrapConfiguration mt;
    mt.architecture = Architecture::MicrotrapArray;
    mt.inter_trap_distance = 90e-6;
    const double chi_mt = chi_from_modes(normal_modes(mt));
    const double err = std::abs(chi_paul - (std::sqrt(3.0) - 1.0));
    const bool ok = err <= 1e-12 && std::abs(chi_mt / 1.8e-4 - 1.0) <= 0.1;
    return {ok, fmt("paul chi error %.1e, 90 um microtrap chi %.3e", err, chi_mt)};
}

Outcome table_one() {
    struct Row {
        double tg, f0;
        long n;
        std::vector<double> cells;  // 0 marks an empty cell
    };
    const std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    const std::vector<Row> rows{
        {0.45, 1.0e-4, 1552, {0, 7.0e-1, 2.9e-1, 3.1e-2, 3.2e-3, 4.1e-4}},
        {1.0, 6.3e-9, 640, {0, 8.7e-1, 1.2e-1, 1.3e-2, 1.3e-3, 1.3e-4}},
        {1.75, 2.4e-7, 191, {1.7e-1, 3.5e-1, 3.8e-2, 3.8e-3, 3.8e-4, 3.8e-5}},
        {0.25, 1.8e-4, 1088, {0, 9.9e-1, 2.1e-1, 2.2e-2, 2.4e-3, 4.0e-4}},
        {0.65, 3.2e-5, 64, {8.7e-1, 1.2e-1, 1.3e-2, 1.3e-3, 1.6e-4, 4.5e-5}},
        {1.25, 2.2e-6, 46, {7.1e-1, 9.0e-2, 9.2e-3, 9.2e-4, 9.4e-5, 1.1e-5}},
    };
    int cells = 0, bad = 0;
    std::string first;
    for (const auto& r : rows) {
        const auto row = budget_row(r.tg, r.f0, r.n, eps);
        for (std::size_t k = 0; k < eps.size(); ++k) {
            ++cells;
            const auto& got = row.infidelity[k];
            bool ok;
            if (r.cells[k] == 0) {
                ok = !got.has_value();
            } else {
                ok = got && fmt("%.1e", *got) == fmt("%.1e", r.cells[k]) &&
                     std::abs(*got - oracle::degraded_infidelity(1.0 - r.f0, r.n, eps[k])) <= 1e-12;
            }
            if (!ok && bad++ == 0)
                first = fmt(" (first mismatch T=%.2f eps=%.0e: table %.1e, got %s)", r.tg, eps[k], r.cells[k],
                            got ? fmt("%.2e", *got).c_str() : "empty");
        }
    }
    return {bad == 0, fmt("%d/%d cells reproduced%s", cells - bad, cells, first.c_str())};
}

double full_coulomb_cost(const PulseSequence& seq, const TrapConfiguration& trap) {
    SimulationOptions o;
    o.coulomb = CoulombModel::Full;
    return ode_infidelity(simulate_sequence(seq, trap, o), trap.mean_occupation).total;
}

Outcome microtrap_case_study() {
    // Pool the candidates of several seeded searches, keep those that are good in
    // phase 1 and visibly degraded by the full Coulomb force, and refine the ones
    // whose full-Coulomb cost is lowest.
    const auto trap = microtrap();
    const auto modes = normal_modes(trap);
    const double rate = trap.units().rate(1e9);
    struct Entry {
        double full;
        GateSolution sol;
        std::uint64_t seed;
    };
    std::vector<Entry> pool;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        GlobalSearchConfig c;
        c.scheme = parse_scheme("gpg:8");
        c.gate_time = periods_to_time(1.75);
        c.stages = 6;
        c.restarts = 64;
        c.candidates = 16;
        c.seed = seed;
        c.max_rate = rate;
        for (const auto& s : optimize_global(c, trap, modes).candidates) {
            if (s.breakdown.total > 1e-5) continue;
            const double full = full_coulomb_cost(s.sequence, trap);
            if (full >= 3 * s.breakdown.total) pool.push_back({full, s, seed});
        }
    }
    if (pool.empty()) return {false, "no phase-1 candidate at or below 1e-5 degrades by 3x"};
    std::sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) { return a.full < b.full; });
    LocalSearchConfig lc;
    lc.rate = rate;
    lc.screen_radius = 3;
    lc.screen_candidates = 48;
    const Entry* best = nullptr;
    double best_local = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < std::min<std::size_t>(3, pool.size()); ++k) {
        const double local = optimize_local(pool[k].sol, trap, lc).ode.total;
        if (local < best_local) {
            best_local = local;
            best = &pool[k];
        }
    }
    const double p1 = best->sol.breakdown.total;
    const bool ok = best_local <= 5e-6 && 3 * best_local <= best->full;
    return {ok, fmt("seed %llu: phase 1 %.2e, full Coulomb %.2e (x%.1f), local at 1 GHz %.2e (%zu pooled)",
                    static_cast<unsigned long long>(best->seed), p1, best->full, best->full / p1, best_local,
                    pool.size())};
}

Outcome paul_case_study() {
    const auto trap = paul();
    const auto modes = normal_modes(trap);
    GlobalSearchConfig c;
    c.scheme = parse_scheme("gpg:10");
    c.gate_time = periods_to_time(0.25);
    c.stages = 10;
    c.restarts = 128;
    c.candidates = 16;
    c.seed = 1;
    const auto result = optimize_global(c, trap, modes);
    int eligible = 0;
    for (const auto& s : result.candidates) {
        if (s.breakdown.total > 1e-5) continue;
        ++eligible;
        const double full = full_coulomb_cost(s.sequence, trap);
        if (full <= 3 * s.breakdown.total)
            return {true, fmt("phase 1 %.2e, full Coulomb %.2e (x%.2f)", s.breakdown.total, full, full / s.breakdown.total)};
    }
    return {false, fmt("%d candidates at or below 1e-5, none within 3x under full Coulomb (best phase 1 %.2e)",
                       eligible, result.solution.breakdown.total)};
}

Outcome oracle_equivalence() {
    // Pass/fail uses pulses spread at 100 f_min and centred on each group time.
    // The grid-snapped train at the same rate is reported alongside: its centroid
    // offsets of up to half a slot are a first-order error of their own.
    const auto trap = microtrap();
    const auto model = cost_model(trap, normal_modes(trap));
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<long> zd(-10, 10);
    std::uniform_real_distribution<double> gap(0.3, 1.5);
    SimulationOptions o;
    o.coulomb = CoulombModel::Linearized;
    double worst = 0.0, worst_snapped = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        PulseSequence seq;
        double t = 0.0;
        for (int k = 0; k < 8; ++k) {
            long z = 0;
            while (z == 0) z = zd(rng);
            seq.groups.push_back({z, t});
            t += gap(rng);
        }
        seq.gate_time = seq.groups.back().time;
        const double rate = 100 * min_repetition_rate(seq);
        const double lin = truncated_infidelity(seq, model).total;
        const auto spread = ode_infidelity(simulate_gate(unsnapped_impulses(seq, rate), trap, o),
                                           trap.mean_occupation, Aggregation::BasisAverage);
        const auto snapped = ode_infidelity(simulate_sequence(seq, rate, trap, o), trap.mean_occupation,
                                            Aggregation::BasisAverage);
        worst = std::max(worst, std::abs(spread.total - lin) / lin);
        worst_snapped = std::max(worst_snapped, std::abs(snapped.total - lin) / lin);
    }
    return {worst <= 1e-3, fmt("worst relative difference %.2e over 20 sequences (grid-snapped %.2e)", worst,
                               worst_snapped)};
}

Outcome numerical_hygiene() {
    double drift = 0.0;
    for (const auto& trap : {paul(), microtrap()}) {
        SimulationOptions o;
        o.end = periods_to_time(10);
        o.max_refinements = 0;
        const auto set = simulate_gate(std::vector<Impulse>{{0.0, 5.0}}, trap, o);
        for (const auto& b : set.basis) drift = std::max(drift, b.energy_drift);
    }

    const auto trap = paul();
    auto run = [&](double step) {
        SimulationOptions o;
        o.step = step;
        o.max_refinements = 0;
        o.drift_tolerance = 1e300;
        o.end = periods_to_time(1);
        return simulate_gate(std::vector<Impulse>{{0.0, 40.0}, {1.0, -25.0}}, trap, o).basis[1].final;
    };
    const double h = periods_to_time(1.0 / 256);
    const auto exact = run(h / 64);
    auto err = [&](const TrajectoryState& s) {
        return std::hypot(s.x[0] - exact.x[0], s.x[1] - exact.x[1], std::hypot(s.v[0] - exact.v[0], s.v[1] - exact.v[1]));
    };
    const double ratio = err(run(h)) / err(run(h / 2));

    const FixedTimingCost cost(cost_model(trap, normal_modes(trap)), scheme_times(parse_scheme("gpg:10"), periods_to_time(0.5)));
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> zd(-12, 12);
    double grad_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> z(cost.size());
        for (auto& v : z) v = zd(rng);
        std::vector<double> g(z.size());
        cost.value_and_gradient(z, g);
        const auto fd = oracle::central_gradient([&](const std::vector<double>& x) { return cost.value(x); }, z, 1e-5);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) {
            num += (g[k] - fd[k]) * (g[k] - fd[k]);
            den += fd[k] * fd[k];
        }
        grad_err = std::max(grad_err, std::sqrt(num / den));
    }
    const bool ok = drift < 1e-9 && ratio > 12 && ratio < 20 && grad_err <= 1e-6;
    return {ok, fmt("drift %.1e per period, step-halving ratio %.1f, gradient error %.1e", drift, ratio, grad_err)};
}

double best_cost(const std::string& scheme, const TrapConfiguration& trap, const ModeStructure& modes,
                 double gate_time_periods, std::uint64_t seed, double max_rate, long budget) {
    GlobalSearchConfig c;
    c.scheme = parse_scheme(scheme);
    c.gate_time = periods_to_time(gate_time_periods);
    c.seed = seed;
    c.max_rate = max_rate;
    c.evaluation_budget = budget;
    c.stages = 6;
    c.restarts = 32;
    const auto r = optimize_global(c, trap, modes);
    return r.solution.meta.no_solution ? std::numeric_limits<double>::infinity() : r.solution.breakdown.total;
}

Outcome multi_ion() {
    // Gate times are capped at 0.6 periods. FRAG places its own timings under the
    // cap; GPG/APG use the gate time scaled from 0.3 periods at 1 GHz by
    // T ~ f^(-2/5).
    const long budget = 3000000;
    std::string detail;
    bool ok = true;
    for (int ions : {3, 4, 5}) {
        const auto trap = paul(ions);
        const auto modes = normal_modes(trap);
        for (double hz : {1e9, 1e10}) {
            const double max_rate = trap.units().rate(hz);
            const double tg = extrapolate_gate_time(0.3, 1e9, hz);
            int apg_wins = 0, gpg_wins = 0;
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                const double frag = best_cost("frag", trap, modes, 0.6, seed, max_rate, budget);
                if (best_cost("apg:16", trap, modes, tg, seed, max_rate, budget) <= frag) ++apg_wins;
                if (best_cost("gpg:10", trap, modes, tg, seed, max_rate, budget) <= frag) ++gpg_wins;
            }
            ok = ok && apg_wins >= 4 && gpg_wins >= 4;
            detail += fmt("%s%d ions %.0f GHz APG %d/5 GPG %d/5", detail.empty() ? "" : ", ", ions, hz / 1e9, apg_wins,
                          gpg_wins);
        }
    }
    return {ok, detail};
}

Outcome microtrap_low_rate() {
    const auto trap = microtrap();
    const auto modes = normal_modes(trap);
    std::string detail;
    for (const char* scheme : {"gpg:10", "apg:16"}) {
        GlobalSearchConfig c;
        c.scheme = parse_scheme(scheme);
        c.gate_time = periods_to_time(1.0);
        c.max_rate = rate_from_per_period(1100);
        c.seed = 1;
        const auto s = optimize_global(c, trap, modes).solution;
        if (s.meta.no_solution) {
            detail += fmt("%s none; ", scheme);
            continue;
        }
        const double fmin = rate_per_period(s.min_rate);
        if (s.breakdown.total <= 1e-4 && fmin <= 1100)
            return {true, fmt("%s cost %.2e at f_min %.0f per period", scheme, s.breakdown.total, fmin)};
        detail += fmt("%s cost %.2e at f_min %.0f; ", scheme, s.breakdown.total, fmin);
    }
    return {false, detail};
}

Outcome frag_exactness() {
    const auto trap = microtrap();
    const auto modes = normal_modes(trap);
    std::string detail;
    for (double tg : {1.5, 1.75, 2.0}) {
        GlobalSearchConfig c;
        c.scheme = parse_scheme("frag");
        c.gate_time = periods_to_time(tg);
        c.seed = 1;
        c.restarts = 32;
        const auto s = optimize_global(c, trap, modes).solution;
        if (s.meta.no_solution) continue;
        const auto& b = s.breakdown;
        const double dp = *std::max_element(b.displacement.begin(), b.displacement.end());
        detail = fmt("T=%.2f: |dphi| %.1e, max dP %.1e", tg, std::abs(b.phase_mismatch), dp);
        if (std::abs(b.phase_mismatch) < 1e-8 && dp < 1e-8) return {true, detail};
    }
    return {false, detail.empty() ? "no FRAG solution" : detail};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"mode structure", mode_structure},
        {"pulse-error table", table_one},
        {"microtrap Coulomb case study", microtrap_case_study},
        {"Paul-trap Coulomb check", paul_case_study},
        {"linearized ODE equals truncated cost", oracle_equivalence},
        {"numerical hygiene", numerical_hygiene},
        {"multi-ion scheme comparison", multi_ion},
        {"microtrap at low repetition rate", microtrap_low_rate},
        {"two-ion FRAG exactness", frag_exactness},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s C%d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].name, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
