#include "fastgate/global_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <map>
#include <set>

#include <Eigen/SVD>

#include "fastgate/error.hpp"
#include "fastgate/lbfgsb.hpp"

namespace fastgate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRatePenalty = 1e3;
constexpr double kTimingStep = 1e-7;

// Maps scheme parameters to the truncated cost. Weight schemes (GPG/APG) share
// fixed timings; timing schemes (GZC/FRAG) are parameterised by (n, tau1..3).
class SchemeObjective {
public:
    SchemeObjective(const GlobalSearchConfig& cfg, const CostModel& model)
        : cfg_(cfg), model_(model),
          fixed_(model, cfg.scheme.timing_scheme() ? std::vector<double>{}
                                                   : scheme_times(cfg.scheme, cfg.gate_time)) {}

    int dimension() const { return cfg_.scheme.parameter_count(); }
    bool timing() const { return cfg_.scheme.timing_scheme(); }
    const FixedTimingCost& fixed() const { return fixed_; }

    std::vector<double> weights(std::span<const double> x) const {
        if (cfg_.scheme.kind == SchemeKind::GPG) return {x.begin(), x.end()};
        const int h = static_cast<int>(x.size());
        std::vector<double> z(2 * h);
        for (int k = 0; k < h; ++k) {
            z[h - 1 - k] = -x[k];
            z[h + k] = x[k];
        }
        return z;
    }

    /// Truncated cost without any penalty term.
    double cost(std::span<const double> x) const {
        if (!timing()) return fixed_.value(weights(x));
        const ContinuousSequence c = timing_sequence(x);
        return truncated_infidelity(c.z, c.t, model_).total;
    }

    double operator()(std::span<const double> x, std::span<double> g) const {
        if (!timing()) {
            if (cfg_.scheme.kind == SchemeKind::GPG) return fixed_.value_and_gradient(x, g);
            const auto z = weights(x);
            std::vector<double> gz(z.size());
            const double f = fixed_.value_and_gradient(z, gz);
            const int h = static_cast<int>(x.size());
            for (int k = 0; k < h; ++k) g[k] = gz[h + k] - gz[h - 1 - k];
            return f;
        }
        return timing_value_and_gradient(x, g);
    }

    // Residual vector and Jacobian with respect to the weight parameters.
    void residuals(std::span<const double> x, Eigen::VectorXd& r, Eigen::MatrixXd& jx) const {
        const auto z = weights(x);
        const int m = fixed_.residual_count();
        const int n = fixed_.size();
        r.resize(m);
        std::vector<double> jac(static_cast<std::size_t>(m) * n);
        fixed_.residuals(z, std::span<double>(r.data(), m), jac);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> jz(
            jac.data(), m, n);
        if (cfg_.scheme.kind == SchemeKind::GPG) {
            jx = jz;
            return;
        }
        const int h = static_cast<int>(x.size());
        jx.resize(m, h);
        for (int k = 0; k < h; ++k) jx.col(k) = jz.col(h + k) - jz.col(h - 1 - k);
    }

    ContinuousSequence timing_sequence(std::span<const double> x) const {
        const auto r = cfg_.scheme.ratios();
        const double n = x[0];
        return {{-n * r[0], -n * r[1], -n * r[2], n * r[2], n * r[1], n * r[0]},
                {-x[1], -x[2], -x[3], x[3], x[2], x[1]}};
    }

    double rate_penalty(const ContinuousSequence& c) const {
        if (!cfg_.max_rate) return 0.0;
        std::vector<int> order(c.t.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return c.t[a] < c.t[b]; });
        double pen = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const int a = order[i], b = order[i + 1];
            const double need = (std::abs(c.z[a]) + std::abs(c.z[b])) / (2.0 * *cfg_.max_rate);
            const double deficit = need - (c.t[b] - c.t[a]);
            if (deficit > 0) pen += deficit * deficit;
        }
        return kRatePenalty * pen;
    }

    double timing_penalised(std::span<const double> x) const {
        const ContinuousSequence c = timing_sequence(x);
        return truncated_infidelity(c.z, c.t, model_).total + rate_penalty(c);
    }

    double timing_value_and_gradient(std::span<const double> x, std::span<double> g) const {
        const ContinuousSequence c = timing_sequence(x);
        const double f = truncated_infidelity(c.z, c.t, model_).total + rate_penalty(c);
        if (g.empty()) return f;
        std::vector<double> xp(x.begin(), x.end());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double h = kTimingStep * std::max(1.0, std::abs(x[i]));
            xp[i] = x[i] + h;
            const double fp = timing_penalised(xp);
            xp[i] = x[i] - h;
            const double fm = timing_penalised(xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return f;
    }

    int evaluations_per_call() const { return timing() ? 1 + 2 * dimension() : 1; }

private:
    const GlobalSearchConfig& cfg_;
    const CostModel& model_;
    FixedTimingCost fixed_;
};

struct Bounds {
    std::vector<double> lower, upper;
};

// Largest |z| keeping every group clear of its neighbours at the capped rate.
double weight_cap(const GlobalSearchConfig& cfg) {
    if (!cfg.max_rate || cfg.scheme.timing_scheme()) return kInf;
    return *cfg.max_rate * cfg.gate_time / cfg.scheme.groups;
}

Bounds stage_bounds(const GlobalSearchConfig& cfg, double bound) {
    Bounds b;
    const int d = cfg.scheme.parameter_count();
    if (cfg.scheme.timing_scheme()) {
        const auto r = cfg.scheme.ratios();
        const double rmax = std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
        const double gap = 1e-9 * cfg.gate_time;  // timings must stay strictly positive
        b.lower = {0.0, gap, gap, gap};
        b.upper = {bound / rmax, 0.5 * cfg.gate_time, 0.5 * cfg.gate_time, 0.5 * cfg.gate_time};
    } else {
        const double cap = std::min(bound, weight_cap(cfg));
        b.lower.assign(d, -cap);
        b.upper.assign(d, cap);
    }
    return b;
}

struct Outcome {
    std::vector<double> continuous;
    double continuous_cost = kInf;
    std::vector<double> parameters;
    double cost = kInf;
    double min_rate = kInf;
    bool eligible = false;
    long evaluations = 0;
    std::uint64_t seed = 0;
};

std::uint64_t restart_seed(std::uint64_t seed, int stage, int restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stage), static_cast<std::uint32_t>(restart)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Integer descent by single and paired +-1 moves, clamped to |z| <= limit.
double polish_integers(const SchemeObjective& obj, std::vector<double>& x, double f, double limit,
                       long& evals) {
    const int n = static_cast<int>(x.size());
    auto ok = [&](double v) { return std::abs(v) <= limit; };
    for (int sweep = 0; sweep < 1000; ++sweep) {
        bool improved = false;
        for (int i = 0; i < n && !improved; ++i) {
            for (int d : {1, -1}) {
                x[i] += d;
                if (ok(x[i])) {
                    const double t = obj.cost(x);
                    ++evals;
                    if (t < f) {
                        f = t;
                        improved = true;
                        break;
                    }
                }
                x[i] -= d;
            }
        }
        for (int i = 0; i < n && !improved; ++i) {
            for (int j = i + 1; j < n && !improved; ++j) {
                for (int di : {1, -1}) {
                    for (int dj : {1, -1}) {
                        x[i] += di;
                        x[j] += dj;
                        if (ok(x[i]) && ok(x[j])) {
                            const double t = obj.cost(x);
                            ++evals;
                            if (t < f) {
                                f = t;
                                improved = true;
                                break;
                            }
                        }
                        x[i] -= di;
                        x[j] -= dj;
                    }
                    if (improved) break;
                }
            }
        }
        if (!improved) break;
    }
    return f;
}

double clamp_integer(double v, double limit) {
    const double r = static_cast<double>(std::lround(v));
    return std::clamp(r, -limit, limit);
}

// Samples integer points x* + V c with c uniform in a box, V spanning the
// directions along which the residuals are least sensitive.
double lattice_round(const SchemeObjective& obj, const GlobalSearchConfig& cfg,
                     const std::vector<double>& xc, std::vector<double>& best, double limit,
                     std::mt19937_64& rng, long& evals) {
    const int n = static_cast<int>(xc.size());
    Eigen::VectorXd r;
    Eigen::MatrixXd jx;
    obj.residuals(xc, r, jx);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jx, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    int rank = 0;
    const double smax = sv.size() ? sv[0] : 0.0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-10 * smax) ++rank;
    const int k = std::clamp(n - rank, std::min(2, n), n);
    const Eigen::MatrixXd V = svd.matrixV().rightCols(k);

    std::set<std::vector<double>> seen;
    best.resize(n);
    for (int i = 0; i < n; ++i) best[i] = clamp_integer(xc[i], limit);
    double fbest = obj.cost(best);
    ++evals;
    seen.insert(best);
    std::uniform_real_distribution<double> u(-cfg.lattice_radius, cfg.lattice_radius);
    Eigen::VectorXd c(k);
    std::vector<double> cand(n);
    for (int s = 0; s < cfg.lattice_samples; ++s) {
        for (int j = 0; j < k; ++j) c[j] = u(rng);
        const Eigen::VectorXd step = V * c;
        for (int i = 0; i < n; ++i) cand[i] = clamp_integer(xc[i] + step[i], limit);
        if (!seen.insert(cand).second) continue;
        const double f = obj.cost(cand);
        ++evals;
        if (f < fbest) {
            fbest = f;
            best = cand;
        }
    }
    return polish_integers(obj, best, fbest, limit, evals);
}

Outcome run_restart(const SchemeObjective& obj, const GlobalSearchConfig& cfg, const Bounds& b,
                    const std::vector<double>* warm, int stage, int restart) {
    Outcome out;
    out.seed = restart_seed(cfg.seed, stage, restart);
    std::mt19937_64 rng(out.seed);
    const int d = obj.dimension();
    std::vector<double> x0(d);
    if (warm) {
        for (int i = 0; i < d; ++i) x0[i] = std::clamp((*warm)[i], b.lower[i], b.upper[i]);
    } else {
        for (int i = 0; i < d; ++i) {
            std::uniform_real_distribution<double> u(b.lower[i], b.upper[i]);
            x0[i] = u(rng);
        }
    }
    BoxLbfgsOptions opt;
    opt.gradient_tolerance = cfg.gradient_tolerance;
    opt.relative_tolerance = cfg.relative_tolerance;
    opt.max_iterations = cfg.max_iterations;
    const BoxLbfgsResult res = minimize_box(std::cref(obj), x0, b.lower, b.upper, opt);
    out.evaluations += res.evaluations * obj.evaluations_per_call();
    out.continuous = res.x;
    out.continuous_cost = obj.cost(res.x);
    ++out.evaluations;

    if (!obj.timing()) {
        const double limit = std::floor(b.upper[0] + 1e-9);
        std::vector<double> x;
        switch (cfg.rounding) {
            case RoundingMode::Nearest: {
                x.resize(d);
                for (int i = 0; i < d; ++i) x[i] = clamp_integer(res.x[i], limit);
                out.cost = obj.cost(x);
                ++out.evaluations;
                break;
            }
            case RoundingMode::Polish: {
                x.resize(d);
                for (int i = 0; i < d; ++i) x[i] = clamp_integer(res.x[i], limit);
                const double f = obj.cost(x);
                ++out.evaluations;
                out.cost = polish_integers(obj, x, f, limit, out.evaluations);
                break;
            }
            case RoundingMode::Lattice:
                out.cost = lattice_round(obj, cfg, res.x, x, limit, rng, out.evaluations);
                break;
        }
        out.parameters = x;
    } else {
        // Round n, then re-optimise the timings with n held fixed.
        const double n = res.x[0];
        std::vector<double> choices{std::floor(n), std::ceil(n)};
        if (choices[0] == choices[1]) choices.pop_back();
        for (double ni : choices) {
            if (ni <= 0) continue;
            std::vector<double> lo(b.lower), hi(b.upper), x = res.x;
            lo[0] = hi[0] = x[0] = ni;
            const BoxLbfgsResult rt = minimize_box(std::cref(obj), x, lo, hi, opt);
            out.evaluations += rt.evaluations * obj.evaluations_per_call() + 1;
            const double f = obj.cost(rt.x);
            if (f < out.cost) {
                out.cost = f;
                out.parameters = rt.x;
            }
        }
        if (out.parameters.empty()) {
            out.parameters = res.x;
            out.parameters[0] = 0.0;
            out.cost = obj.cost(out.parameters);
        }
    }
    return out;
}

}  // namespace

const char* rounding_name(RoundingMode mode) {
    switch (mode) {
        case RoundingMode::Nearest: return "nearest";
        case RoundingMode::Polish: return "polish";
        case RoundingMode::Lattice: return "lattice";
    }
    return "";
}

RoundingMode parse_rounding(const std::string& name) {
    if (name == "nearest") return RoundingMode::Nearest;
    if (name == "polish") return RoundingMode::Polish;
    if (name == "lattice") return RoundingMode::Lattice;
    throw ConfigError("unknown rounding mode '" + name + "'");
}

void GlobalSearchConfig::validate() const {
    if (!(gate_time > 0)) throw ConfigError("gate time must be positive");
    if (!(initial_bound >= 0) || !std::isfinite(initial_bound))
        throw ConfigError("initial bound must be finite and non-negative");
    if (!(expansion > 1)) throw ConfigError("bound expansion factor must exceed 1");
    if (stages < 1) throw ConfigError("at least one stage is required");
    if (restarts < 1) throw ConfigError("at least one restart per stage is required");
    if (candidates < 0) throw ConfigError("candidate count must be non-negative");
    if (lattice_samples < 0 || !(lattice_radius >= 0)) throw ConfigError("bad lattice settings");
    if (max_rate && !(*max_rate > 0)) throw ConfigError("maximum repetition rate must be positive");
    if (evaluation_budget && *evaluation_budget < 1) throw ConfigError("evaluation budget must be positive");
    if (scheme.kind == SchemeKind::APG && scheme.groups % 2 != 0)
        throw ConfigError("APG requires an even number of groups");
    if (!scheme.timing_scheme() && scheme.groups < 1) throw ConfigError("scheme needs groups");
}

std::vector<long> round_to_integers(std::span<const double> z) {
    std::vector<long> out;
    out.reserve(z.size());
    for (double v : z) out.push_back(std::lround(v));
    return out;
}

double extrapolate_gate_time(double gate_time, double f_old, double f_new) {
    if (!(f_old > 0) || !(f_new > 0)) throw ConfigError("repetition rates must be positive");
    return gate_time * std::pow(f_new / f_old, -0.4);
}

double safe_min_rate(const PulseSequence& seq) {
    if (seq.groups.size() < 2) return 0.0;
    try {
        return min_repetition_rate(seq);
    } catch (const SchemeError&) {
        return kInf;
    }
}

GateSolution make_solution(const SchemeSpec& scheme, std::vector<double> parameters, double gate_time,
                           const CostModel& model) {
    GateSolution s;
    s.scheme = scheme;
    s.parameters = std::move(parameters);
    s.sequence = build_sequence({scheme, s.parameters, gate_time});
    s.breakdown = truncated_infidelity(s.sequence, model);
    s.min_rate = safe_min_rate(s.sequence);
    return s;
}

GlobalResult optimize_global(const GlobalSearchConfig& cfg, const TrapConfiguration& trap,
                             const ModeStructure& modes) {
    cfg.validate();
    const CostModel model = cost_model(trap, modes);
    const SchemeObjective obj(cfg, model);
    const double rate_tol = 1e-12;

    GlobalResult result;
    struct Seen {
        double cost, continuous_cost;
        int stage, restart;
    };
    std::map<std::vector<double>, Seen> pool;
    Outcome incumbent;
    int inc_stage = -1, inc_restart = -1;
    bool have = false;
    long total = 0;
    bool exhausted = false;

    for (int stage = 0;; ++stage) {
        if (cfg.evaluation_budget) {
            if (total >= *cfg.evaluation_budget) break;
        } else if (stage >= cfg.stages) {
            break;
        }
        const double bound = cfg.initial_bound * std::pow(cfg.expansion, std::min(stage, cfg.stages - 1));
        const Bounds b = stage_bounds(cfg, bound);
        std::vector<Outcome> outcomes(cfg.restarts);
        const std::vector<double>* warm = have ? &incumbent.continuous : nullptr;
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
        for (int r = 0; r < cfg.restarts; ++r)
            outcomes[r] = run_restart(obj, cfg, b, r == 0 ? warm : nullptr, stage, r);

        StageRecord rec;
        rec.stage = stage;
        rec.bound = bound;
        rec.stage_best_cost = kInf;
        for (int r = 0; r < cfg.restarts; ++r) {
            if (cfg.evaluation_budget && total >= *cfg.evaluation_budget) {
                exhausted = true;
                break;
            }
            Outcome& o = outcomes[r];
            total += o.evaluations;
            rec.evaluations += o.evaluations;
            ++rec.restarts;
            const PulseSequence seq = build_sequence({cfg.scheme, o.parameters, cfg.gate_time});
            o.min_rate = safe_min_rate(seq);
            o.eligible = !cfg.max_rate || o.min_rate <= *cfg.max_rate * (1 + rate_tol);
            if (!o.eligible) continue;
            ++rec.eligible;
            if (cfg.candidates > 0 && !pool.contains(o.parameters))
                pool.emplace(o.parameters, Seen{o.cost, o.continuous_cost, stage, r});
            if (o.cost < rec.stage_best_cost) {
                rec.stage_best_cost = o.cost;
                rec.stage_best_restart = r;
            }
            if (!have || o.cost < incumbent.cost) {
                incumbent = o;
                inc_stage = stage;
                inc_restart = r;
                have = true;
            }
        }
        rec.best_cost = have ? incumbent.cost : kInf;
        result.stages.push_back(rec);
    }
    result.evaluations = total;

    if (!have) {
        // Nothing satisfied the rate cap: report the empty gate with diagnostics.
        std::vector<double> zero(cfg.scheme.parameter_count(), 0.0);
        if (cfg.scheme.timing_scheme()) zero = {0.0, 0.25 * cfg.gate_time, 0.25 * cfg.gate_time, 0.25 * cfg.gate_time};
        result.solution = make_solution(cfg.scheme, zero, cfg.gate_time, model);
        result.solution.meta.no_solution = true;
        result.solution.meta.diagnostics = "no restart produced a solution within the repetition-rate cap";
        result.solution.meta.evaluations = total;
        result.solution.meta.seed = cfg.seed;
        result.solution.meta.budget_exhausted = exhausted;
        return result;
    }

    auto finish = [&](const std::vector<double>& params, double continuous_cost, int stage, int restart) {
        GateSolution sol = make_solution(cfg.scheme, params, cfg.gate_time, model);
        sol.meta.stage = stage;
        sol.meta.restart = restart;
        sol.meta.seed = cfg.seed;
        sol.meta.evaluations = total;
        sol.meta.continuous_cost = continuous_cost;
        sol.meta.rounding_degradation =
            sol.breakdown.total / std::max(continuous_cost, std::numeric_limits<double>::min());
        sol.meta.rounding_flagged = sol.meta.rounding_degradation > 10.0;
        sol.meta.budget_exhausted = exhausted;
        if (sol.sequence.groups.empty()) {
            sol.meta.no_solution = true;
            sol.meta.diagnostics = "every restart rounded to the empty sequence";
        }
        return sol;
    };
    result.solution = finish(incumbent.parameters, incumbent.continuous_cost, inc_stage, inc_restart);

    std::vector<std::pair<std::vector<double>, Seen>> ranked(pool.begin(), pool.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.cost < b.second.cost; });
    for (const auto& [params, seen] : ranked) {
        if (static_cast<int>(result.candidates.size()) >= cfg.candidates) break;
        GateSolution c = finish(params, seen.continuous_cost, seen.stage, seen.restart);
        if (!c.sequence.groups.empty()) result.candidates.push_back(std::move(c));
    }
    return result;
}

}  // namespace fastgate
