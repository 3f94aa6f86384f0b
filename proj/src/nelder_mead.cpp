#include "fastgate/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fastgate {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& opt) {
    const std::size_t n = x0.size();
    NelderMeadResult res;
    if (n == 0) {
        res.x = x0;
        res.f = f(x0);
        res.evaluations = 1;
        res.converged = true;
        return res;
    }
    const double dn = static_cast<double>(n);
    const double alpha = 1.0, beta = 1.0 + 2.0 / dn, gamma = 0.75 - 0.5 / dn, delta = 1.0 - 1.0 / dn;

    std::vector<std::vector<double>> p(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) p[i + 1][i] += steps[i];
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(p[i]);
    res.evaluations = static_cast<long>(n + 1);

    std::vector<std::size_t> idx(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto left = [&] { return opt.max_evaluations - res.evaluations; };
    auto trial = [&](std::vector<double>& out, double coef) {
        const auto& worst = p[idx[n]];
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (centroid[j] - worst[j]);
        ++res.evaluations;
        return f(out);
    };

    while (true) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        const double fbest = fv[idx[0]], fworst = fv[idx[n]];
        double edge = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j) edge = std::max(edge, std::abs(p[idx[i]][j] - p[idx[0]][j]));
        if (fbest <= opt.target || fworst - fbest <= opt.f_tolerance || edge <= opt.x_tolerance) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= opt.max_evaluations) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += p[idx[i]][j] / dn;

        const double fr = trial(xr, alpha);
        if (fr < fbest) {
            const double fe = left() > 0 ? trial(xe, alpha * beta) : fr;
            if (fe < fr) {
                p[idx[n]] = xe;
                fv[idx[n]] = fe;
            } else {
                p[idx[n]] = xr;
                fv[idx[n]] = fr;
            }
            continue;
        }
        if (fr < fv[idx[n - 1]]) {
            p[idx[n]] = xr;
            fv[idx[n]] = fr;
            continue;
        }
        const bool outside = fr < fworst;
        if (left() <= 0) {
            if (outside) {
                p[idx[n]] = xr;
                fv[idx[n]] = fr;
            }
            break;
        }
        const double fc = trial(xc, outside ? alpha * gamma : -gamma);
        if (fc < (outside ? fr : fworst)) {
            p[idx[n]] = xc;
            fv[idx[n]] = fc;
            continue;
        }
        if (left() < static_cast<long>(n)) break;
        const auto& best = p[idx[0]];
        for (std::size_t i = 1; i <= n; ++i) {
            auto& v = p[idx[i]];
            for (std::size_t j = 0; j < n; ++j) v[j] = best[j] + delta * (v[j] - best[j]);
            fv[idx[i]] = f(v);
            ++res.evaluations;
        }
    }
    const std::size_t b = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = p[b];
    res.f = fv[b];
    return res;
}

}  // namespace fastgate
