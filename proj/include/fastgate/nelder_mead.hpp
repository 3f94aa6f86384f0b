#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fastgate {

struct NelderMeadOptions {
    long max_evaluations = 2000;
    double f_tolerance = 0.0;   // stop when the simplex value spread falls below this
    double x_tolerance = 1e-12; // or its largest edge does
    double target = -1e300;     // or the best value reaches this
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    long evaluations = 0;
    bool converged = false;
};

/// Dimension-adaptive Nelder-Mead simplex search; `steps` sets the initial simplex edges.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& options = {});

}  // namespace fastgate
