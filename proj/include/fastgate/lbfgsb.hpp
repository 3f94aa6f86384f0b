#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fastgate {

/// Objective returning f(x) and writing the gradient into g.
using Objective = std::function<double(std::span<const double> x, std::span<double> g)>;

struct BoxLbfgsOptions {
    int memory = 10;
    int max_iterations = 500;
    double gradient_tolerance = 1e-12;  // projected-gradient infinity norm
    double relative_tolerance = 1e-15;  // relative decrease of f between iterations
    double absolute_tolerance = 0.0;    // stop once f falls below this
    long max_evaluations = 50000;
};

struct BoxLbfgsResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    long evaluations = 0;
    bool converged = false;
    std::string reason;
};

/// Bound-constrained limited-memory BFGS: two-loop recursion on the free
/// variables with a projected Armijo backtracking search.
BoxLbfgsResult minimize_box(const Objective& f, std::vector<double> x0,
                            const std::vector<double>& lower, const std::vector<double>& upper,
                            const BoxLbfgsOptions& options = {});

}  // namespace fastgate
