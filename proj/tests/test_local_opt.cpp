#include <cmath>

#include "doctest.h"
#include "fastgate/error.hpp"
#include "fastgate/global_opt.hpp"
#include "fastgate/local_opt.hpp"
#include "fastgate/reference.hpp"
#include "fastgate/units.hpp"

using namespace fastgate;

namespace {

TrapConfiguration microtrap() {
    TrapConfiguration c;
    c.architecture = Architecture::MicrotrapArray;
    c.chi = 1.8e-4;
    return c;
}

GateSolution solution(const TrapConfiguration& trap, const std::string& scheme, std::vector<double> z,
                      double periods) {
    return make_solution(parse_scheme(scheme), std::move(z), periods_to_time(periods),
                         cost_model(trap, normal_modes(trap)));
}

LocalSearchConfig quick(double rate) {
    LocalSearchConfig cfg;
    cfg.rate = rate;
    cfg.newton_iterations = 3;
    cfg.simplex_evaluations = 20;
    cfg.screen_rounds = 2;
    cfg.screen_candidates = 4;
    cfg.max_evaluations = 200;
    return cfg;
}

// Independent enumeration of every block shift in [-r, r]^n.
double brute_force(const GateSolution& s, const TrapConfiguration& trap, const LocalSearchConfig& cfg, int r) {
    const auto& groups = s.sequence.groups;
    const int n = static_cast<int>(groups.size());
    std::vector<long> base;
    for (const auto& g : groups) base.push_back(block_start_slot(g.time - s.sequence.window_begin, std::labs(g.z), cfg.rate));
    const double end = cfg.extension * s.sequence.gate_time;
    const long hi = std::max(static_cast<long>(std::floor(end * cfg.rate + 1e-9)), base.back() + std::labs(groups.back().z) - 1);
    const long lo = std::min(0L, base.front());
    double best = 1e300;
    std::vector<int> shift(n, -r);
    while (true) {
        std::vector<Impulse> kicks;
        bool ok = true;
        long prev_end = lo - 1;
        for (int k = 0; k < n && ok; ++k) {
            const long start = base[k] + shift[k];
            const long len = std::labs(groups[k].z);
            if (start <= prev_end || start + len - 1 > hi) ok = false;
            prev_end = start + len - 1;
            for (long m = 0; m < len; ++m)
                kicks.push_back({static_cast<double>(start + m) / cfg.rate, groups[k].z > 0 ? 1.0 : -1.0});
        }
        if (ok) {
            SimulationOptions opt = cfg.simulation;
            opt.end = end;
            const auto set = simulate_gate(kicks, trap, opt);
            best = std::min(best, ode_infidelity(set, trap.mean_occupation, cfg.aggregation).total);
        }
        int k = 0;
        while (k < n && ++shift[k] > r) shift[k++] = -r;
        if (k == n) break;
    }
    return best;
}

}  // namespace

TEST_CASE("radius zero returns the input evaluation") {
    const auto trap = microtrap();
    const auto s = solution(trap, "gpg:4", {4, -9, 9, -4}, 1.0);
    auto cfg = quick(rate_from_per_period(400));
    cfg.shift_radius = 0;
    const auto r = enumerate_grid_shifts(s, trap, cfg);
    CHECK(r.ode.total == r.input.total);
    // The local frame runs to the end of the extended window.
    auto seq = s.sequence;
    seq.gate_time *= cfg.extension;
    CHECK(r.ode.total == doctest::Approx(snapped_cost(seq, trap, cfg).total).epsilon(1e-12));
}

TEST_CASE("two groups at radius one use at most nine evaluations") {
    const auto trap = microtrap();
    const auto s = solution(trap, "gpg:2", {6, -6}, 0.5);
    auto cfg = quick(rate_from_per_period(300));
    cfg.shift_radius = 1;
    const auto r = enumerate_grid_shifts(s, trap, cfg);
    CHECK(r.evaluations <= 9);
    CHECK(r.ode.total == doctest::Approx(brute_force(s, trap, cfg, 1)).epsilon(1e-12));
}

TEST_CASE("exhaustive shifts match brute-force enumeration") {
    const auto trap = microtrap();
    const auto s = solution(trap, "gpg:3", {5, -9, 4}, 0.75);
    auto cfg = quick(rate_from_per_period(250));
    cfg.shift_radius = 1;
    const auto r = enumerate_grid_shifts(s, trap, cfg);
    CHECK(r.ode.total == doctest::Approx(brute_force(s, trap, cfg, 1)).epsilon(1e-12));
    CHECK(r.ode.total <= r.input.total);
}

TEST_CASE("refinement never returns a worse gate") {
    const auto trap = microtrap();
    for (const auto& z : std::vector<std::vector<double>>{{4, -9, 9, -4}, {2, -7, 11, -6}}) {
        const auto s = solution(trap, "gpg:4", z, 1.0);
        const auto cfg = quick(rate_from_per_period(500));
        const auto r = optimize_local(s, trap, cfg);
        CHECK(r.ode.total <= r.input.total);
        CHECK(r.evaluations <= cfg.max_evaluations + 64);
        CHECK(r.solution.meta.phase == "local");
        CHECK(r.solution.sequence.groups.size() == s.sequence.groups.size());
        CHECK(r.ode.total == doctest::Approx(snapped_cost(r.solution.sequence, trap, cfg).total).epsilon(1e-9));
        REQUIRE_FALSE(r.log.empty());
        for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].cost <= r.log[i - 1].cost);
    }
}

TEST_CASE("refinement preserves pulse counts") {
    const auto trap = microtrap();
    const auto s = solution(trap, "apg:4", {5, -3}, 1.0);
    const auto r = optimize_local(s, trap, quick(rate_from_per_period(400)));
    CHECK(r.solution.sequence.total_pulse_pairs() == s.sequence.total_pulse_pairs());
    CHECK(r.solution.sequence.net_pulse_pairs() == s.sequence.net_pulse_pairs());
}

TEST_CASE("parallel refinement equals the serial reference") {
    const auto trap = microtrap();
    const auto s = solution(trap, "gpg:4", {4, -9, 9, -4}, 1.0);
    const auto cfg = quick(rate_from_per_period(500));
    const auto a = optimize_local(s, trap, cfg);
    const auto b = reference::optimize_local(s, trap, cfg);
    CHECK(a.ode.total == b.ode.total);
    CHECK(a.solution.sequence == b.solution.sequence);
}

TEST_CASE("refinement failures") {
    auto trap = microtrap();
    const auto s = solution(trap, "gpg:4", {40, -90, 90, -40}, 0.25);
    CHECK_THROWS_AS(optimize_local(s, trap, quick(rate_from_per_period(50))), LocalOptError);
    TrapConfiguration three;
    three.ion_count = 3;
    CHECK_THROWS_AS(optimize_local(solution(three, "gpg:4", {1, -2, 2, -1}, 1.0), three, quick(100)), LocalOptError);
    auto cfg = quick(100);
    cfg.rate = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
