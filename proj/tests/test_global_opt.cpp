#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "fastgate/error.hpp"
#include "fastgate/global_opt.hpp"
#include "fastgate/reference.hpp"
#include "fastgate/units.hpp"

using namespace fastgate;

namespace {

GlobalSearchConfig small(const std::string& scheme, double periods) {
    GlobalSearchConfig cfg;
    cfg.scheme = parse_scheme(scheme);
    cfg.gate_time = periods_to_time(periods);
    cfg.stages = 3;
    cfg.restarts = 8;
    cfg.lattice_samples = 300;
    cfg.seed = 4;
    return cfg;
}

}  // namespace

TEST_CASE("integer rounding") {
    CHECK(round_to_integers(std::vector<double>{1.4, -2.6}) == std::vector<long>{1, -3});
    CHECK(round_to_integers(std::vector<double>{0.4}) == std::vector<long>{0});
    CHECK(round_to_integers(std::vector<double>{2.5}) == std::vector<long>{3});
    CHECK(round_to_integers(std::vector<double>{-2.5}) == std::vector<long>{-3});
}

TEST_CASE("gate-time extrapolation") {
    CHECK(extrapolate_gate_time(1.7, 5.0, 5.0) == doctest::Approx(1.7));
    CHECK(extrapolate_gate_time(1.0, 1.0, 32.0) == doctest::Approx(0.25));
    CHECK(extrapolate_gate_time(1.0, 1.0, 2.0) == doctest::Approx(std::pow(2.0, -0.4)));
    CHECK(extrapolate_gate_time(1.0, 1.0, 2.0) == doctest::Approx(0.7579).epsilon(1e-4));
}

TEST_CASE("zero bounds give the empty gate") {
    TrapConfiguration trap;
    auto cfg = small("gpg:6", 0.5);
    cfg.initial_bound = 0.0;
    const auto r = optimize_global(cfg, trap, normal_modes(trap));
    CHECK(r.solution.sequence.groups.empty());
    CHECK(r.solution.breakdown.total == doctest::Approx(0.4112).epsilon(1e-3));
    CHECK(r.solution.meta.no_solution);
}

TEST_CASE("global search improves over stages and is seeded") {
    TrapConfiguration trap;
    const auto modes = normal_modes(trap);
    const auto cfg = small("gpg:6", 0.5);
    const auto a = optimize_global(cfg, trap, modes);
    const auto b = optimize_global(cfg, trap, modes);
    CHECK(a.solution.parameters == b.solution.parameters);
    CHECK(a.solution.breakdown.total == b.solution.breakdown.total);
    REQUIRE(a.stages.size() == 3);
    for (std::size_t i = 1; i < a.stages.size(); ++i) CHECK(a.stages[i].best_cost <= a.stages[i - 1].best_cost);
    CHECK(a.solution.breakdown.total < 0.4112);
    for (double z : a.solution.parameters) CHECK(z == std::round(z));
}

TEST_CASE("parallel restarts equal the serial reference") {
    TrapConfiguration trap;
    const auto modes = normal_modes(trap);
    const auto cfg = small("apg:8", 0.75);
    const auto par = optimize_global(cfg, trap, modes);
    const auto ser = reference::optimize_global(cfg, trap, modes);
    CHECK(par.solution.parameters == ser.solution.parameters);
    CHECK(par.evaluations == ser.evaluations);
    REQUIRE(par.candidates.size() == ser.candidates.size());
    for (std::size_t i = 0; i < par.candidates.size(); ++i)
        CHECK(par.candidates[i].parameters == ser.candidates[i].parameters);
}

TEST_CASE("candidates are distinct and ranked") {
    TrapConfiguration trap;
    auto cfg = small("gpg:8", 1.0);
    cfg.candidates = 5;
    const auto r = optimize_global(cfg, trap, normal_modes(trap));
    REQUIRE_FALSE(r.candidates.empty());
    CHECK(r.candidates.size() <= 5);
    CHECK(r.candidates.front().parameters == r.solution.parameters);
    std::set<std::vector<double>> seen;
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        CHECK(seen.insert(r.candidates[i].parameters).second);
        if (i) CHECK(r.candidates[i].breakdown.total >= r.candidates[i - 1].breakdown.total);
    }
}

TEST_CASE("repetition-rate cap is enforced") {
    TrapConfiguration trap;
    auto cfg = small("gpg:8", 1.0);
    cfg.max_rate = rate_from_per_period(200.0);
    const auto r = optimize_global(cfg, trap, normal_modes(trap));
    if (!r.solution.meta.no_solution) CHECK(r.solution.min_rate <= *cfg.max_rate * (1 + 1e-9));
    for (const auto& c : r.candidates) CHECK(c.min_rate <= *cfg.max_rate * (1 + 1e-9));
}

TEST_CASE("evaluation budget stops the search") {
    TrapConfiguration trap;
    auto cfg = small("gpg:6", 0.5);
    cfg.evaluation_budget = 2000;
    const auto r = optimize_global(cfg, trap, normal_modes(trap));
    long sum = 0;
    for (const auto& s : r.stages) sum += s.evaluations;
    CHECK(sum == r.evaluations);
    // The stage that crosses the budget finishes its current restart only.
    CHECK(r.stages.size() >= 1);
    CHECK(r.solution.meta.evaluations == r.evaluations);
}

TEST_CASE("timing schemes keep sign structure") {
    TrapConfiguration trap;
    auto cfg = small("frag", 1.75);
    const auto r = optimize_global(cfg, trap, normal_modes(trap));
    REQUIRE(r.solution.parameters.size() == 4);
    CHECK(is_antisymmetric(r.solution.sequence));
    CHECK(r.solution.parameters[0] == std::round(r.solution.parameters[0]));
}

TEST_CASE("configuration validation") {
    auto cfg = small("gpg:6", 0.5);
    cfg.gate_time = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small("gpg:6", 0.5);
    cfg.expansion = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small("gpg:6", 0.5);
    cfg.restarts = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(parse_rounding(rounding_name(RoundingMode::Polish)) == RoundingMode::Polish);
}
