#include <cmath>

#include "doctest.h"
#include "fastgate/error.hpp"
#include "fastgate/lbfgsb.hpp"
#include "fastgate/nelder_mead.hpp"

using namespace fastgate;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    double f = 0;
    if (!g.empty())
        for (auto& v : g) v = 0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i], b = 1 - x[i];
        f += 100 * a * a + b * b;
        if (!g.empty()) {
            g[i] += -400 * x[i] * a - 2 * b;
            g[i + 1] += 200 * a;
        }
    }
    return f;
}

}  // namespace

TEST_CASE("box L-BFGS finds the unconstrained Rosenbrock minimum") {
    BoxLbfgsOptions opt;
    opt.max_iterations = 2000;
    const auto r = minimize_box(rosenbrock, {-1.2, 1.0, -0.5, 0.8}, std::vector<double>(4, -5),
                                std::vector<double>(4, 5), opt);
    for (double v : r.x) CHECK(v == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.f < 1e-10);
}

TEST_CASE("box L-BFGS respects active bounds") {
    // min (x-3)^2 + (y+2)^2 on [0,1] x [-1,1] -> (1, -1).
    auto f = [](std::span<const double> x, std::span<double> g) {
        if (!g.empty()) {
            g[0] = 2 * (x[0] - 3);
            g[1] = 2 * (x[1] + 2);
        }
        return (x[0] - 3) * (x[0] - 3) + (x[1] + 2) * (x[1] + 2);
    };
    const auto r = minimize_box(f, {0.5, 0.0}, {0, -1}, {1, 1});
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(-1.0));
    CHECK(r.converged);
}

TEST_CASE("box L-BFGS projects an infeasible start") {
    auto f = [](std::span<const double> x, std::span<double> g) {
        if (!g.empty()) g[0] = 2 * x[0];
        return x[0] * x[0];
    };
    const auto r = minimize_box(f, {10.0}, {2.0}, {4.0});
    CHECK(r.x[0] == doctest::Approx(2.0));
}

TEST_CASE("Nelder-Mead on Rosenbrock") {
    NelderMeadOptions opt;
    opt.max_evaluations = 5000;
    opt.x_tolerance = 1e-10;
    const auto r = nelder_mead([](std::span<const double> x) { return rosenbrock(x, {}); }, {-1.2, 1.0},
                               {0.5, 0.5}, opt);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.evaluations <= 5000);
}

TEST_CASE("Nelder-Mead honours its evaluation budget") {
    NelderMeadOptions opt;
    opt.max_evaluations = 40;
    const auto r = nelder_mead([](std::span<const double> x) { return rosenbrock(x, {}); }, {-1.2, 1.0, 0.3},
                               {0.5, 0.5, 0.5}, opt);
    CHECK(r.evaluations <= 40);
    CHECK(r.f <= rosenbrock(std::vector<double>{-1.2, 1.0, 0.3}, {}));
}
