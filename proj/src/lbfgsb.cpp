#include "fastgate/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "fastgate/error.hpp"

namespace fastgate {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void project(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& g,
                               const std::vector<double>& lo, const std::vector<double>& hi) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double moved = std::clamp(x[i] - g[i], lo[i], hi[i]) - x[i];
        m = std::max(m, std::abs(moved));
    }
    return m;
}

}  // namespace

BoxLbfgsResult minimize_box(const Objective& fun, std::vector<double> x,
                            const std::vector<double>& lo, const std::vector<double>& hi,
                            const BoxLbfgsOptions& opt) {
    const std::size_t n = x.size();
    if (lo.size() != n || hi.size() != n) throw GlobalOptError("bound vectors do not match dimension");
    for (std::size_t i = 0; i < n; ++i)
        if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw GlobalOptError("bounds must be finite with lower <= upper");

    BoxLbfgsResult res;
    project(x, lo, hi);
    std::vector<double> g(n), gn(n), xn(n), d(n);
    double f = fun(x, g);
    res.evaluations = 1;

    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;
    std::vector<double> alpha(opt.memory);

    auto finish = [&](bool ok, const char* why) {
        res.x = x;
        res.f = f;
        res.converged = ok;
        res.reason = why;
        return res;
    };

    if (!std::isfinite(f)) return finish(false, "non-finite objective");

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (f <= opt.absolute_tolerance) return finish(true, "absolute tolerance");
        if (projected_gradient_norm(x, g, lo, hi) <= opt.gradient_tolerance)
            return finish(true, "projected gradient tolerance");
        if (res.evaluations >= opt.max_evaluations) return finish(false, "evaluation budget");

        // Variables pinned at a bound with the gradient pushing outward stay fixed.
        std::vector<char> freev(n);
        for (std::size_t i = 0; i < n; ++i) {
            const bool at_lo = x[i] <= lo[i] && g[i] > 0;
            const bool at_hi = x[i] >= hi[i] && g[i] < 0;
            freev[i] = !(at_lo || at_hi);
        }
        for (std::size_t i = 0; i < n; ++i) d[i] = freev[i] ? -g[i] : 0.0;
        const int m = static_cast<int>(S.size());
        for (int k = m - 1; k >= 0; --k) {
            double a = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (freev[i]) a += S[k][i] * d[i];
            alpha[k] = rho[k] * a;
            for (std::size_t i = 0; i < n; ++i)
                if (freev[i]) d[i] -= alpha[k] * Y[k][i];
        }
        if (m > 0) {
            const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
            for (auto& v : d) v *= gamma;
        }
        for (int k = 0; k < m; ++k) {
            double b = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (freev[i]) b += Y[k][i] * d[i];
            b *= rho[k];
            for (std::size_t i = 0; i < n; ++i)
                if (freev[i]) d[i] += S[k][i] * (alpha[k] - b);
        }
        double slope = dot(g, d);
        if (!(slope < 0)) {
            S.clear();
            Y.clear();
            rho.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = freev[i] ? -g[i] : 0.0;
            slope = dot(g, d);
            if (!(slope < 0)) return finish(true, "no descent direction");
        }

        double step = 1.0;
        if (m == 0) {
            double dn = 0.0;
            for (double v : d) dn = std::max(dn, std::abs(v));
            if (dn > 0) step = std::min(1.0, 1.0 / dn);
        }
        bool accepted = false;
        double fn = f;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * d[i];
            project(xn, lo, hi);
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (xn[i] - x[i]);
            fn = fun(xn, gn);
            ++res.evaluations;
            if (std::isfinite(fn) && fn <= f + 1e-4 * decrease) {
                accepted = true;
                break;
            }
            if (res.evaluations >= opt.max_evaluations) break;
            step *= 0.5;
        }
        if (!accepted) {
            if (!S.empty()) {
                // Stale curvature pairs can produce poor directions; retry from steepest descent.
                S.clear();
                Y.clear();
                rho.clear();
                continue;
            }
            return finish(true, "line search made no progress");
        }

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const double sy = dot(s, y);
        const double previous = f;
        x.swap(xn);
        g.swap(gn);
        f = fn;
        if (sy > 1e-12 * dot(y, y) && sy > 0) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > opt.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        const double scale = std::max({std::abs(previous), std::abs(f), 1e-300});
        if (previous - f <= opt.relative_tolerance * scale)
            return finish(true, "relative decrease tolerance");
    }
    return finish(false, "iteration limit");
}

}  // namespace fastgate
