#include "fastgate/local_opt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/Dense>

#include "fastgate/error.hpp"
#include "fastgate/nelder_mead.hpp"

namespace fastgate {

namespace {

using cplx = std::complex<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInfeasible = 1e3;
constexpr int kMaxGroups = 64;
constexpr double kQuarterPi = std::numbers::pi / 4.0;

struct Evaluation {
    OdeResiduals residuals;
    OdeInfidelity cost;
};

class Problem {
public:
    Problem(const GateSolution& sol, const TrapConfiguration& trap, const LocalSearchConfig& cfg)
        : trap_(trap), cfg_(cfg) {
        cfg.validate();
        trap.validate();
        if (trap.ion_count != 2) throw LocalOptError("local refinement covers two-ion systems only");
        input_ = sol.sequence.translated(-sol.sequence.window_begin);
        if (input_.groups.empty()) throw LocalOptError("cannot refine an empty sequence");
        rate_ = cfg.rate;
        window_end_ = cfg.extension * input_.gate_time;
        sim_ = cfg.simulation;
        sim_.end = window_end_;
        sim_.parallel = cfg.parallel;
        for (const auto& g : input_.groups) blocks_.push_back({std::labs(g.z), g.z > 0 ? 1 : -1, g.z});
        try {
            input_train_ = expand_to_kick_train(input_, rate_);
        } catch (const SchemeError& e) {
            std::ostringstream os;
            os << "no feasible grid embedding at the requested repetition rate: minimum "
               << safe_min_rate(input_) << " pulse pairs per unit time; " << e.what();
            throw LocalOptError(os.str());
        }
        lo_slot_ = std::min<long>(0, input_train_.slots.front());
        hi_slot_ = std::max(static_cast<long>(std::floor(window_end_ * rate_ + 1e-9)),
                            input_train_.slots.back());
        for (const auto& g : input_.groups) input_starts_.push_back(block_start_slot(g.time, std::labs(g.z), rate_));
    }

    int groups() const { return static_cast<int>(blocks_.size()); }
    long pairs(int k) const { return blocks_[k].n; }
    int sign(int k) const { return blocks_[k].sign; }
    double rate() const { return rate_; }
    double window_end() const { return window_end_; }
    long lo_slot() const { return lo_slot_; }
    long hi_slot() const { return hi_slot_; }
    const std::vector<long>& input_starts() const { return input_starts_; }
    const PulseSequence& input() const { return input_; }
    const LocalSearchConfig& config() const { return cfg_; }
    const TrapConfiguration& trap() const { return trap_; }

    std::vector<long> snap(std::span<const double> times) const {
        std::vector<long> s(times.size());
        for (std::size_t k = 0; k < times.size(); ++k) s[k] = block_start_slot(times[k], blocks_[k].n, rate_);
        return s;
    }

    bool feasible(const std::vector<long>& starts) const {
        std::vector<int> order(starts.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return starts[a] < starts[b]; });
        for (std::size_t i = 0; i < order.size(); ++i) {
            const int k = order[i];
            if (starts[k] < lo_slot_ || starts[k] + blocks_[k].n - 1 > hi_slot_) return false;
            if (i > 0) {
                const int p = order[i - 1];
                if (starts[p] + blocks_[p].n > starts[k]) return false;
            }
        }
        return true;
    }

    std::optional<Evaluation> evaluate(const std::vector<long>& starts) const {
        if (!feasible(starts)) return std::nullopt;
        std::vector<Impulse> kicks;
        for (int k = 0; k < groups(); ++k)
            for (long m = 0; m < blocks_[k].n; ++m)
                kicks.push_back({static_cast<double>(starts[k] + m) / rate_, static_cast<double>(blocks_[k].sign)});
        const TrajectorySet set = simulate_gate(kicks, trap_, sim_);
        Evaluation e;
        e.residuals = ode_residuals(set);
        e.cost = ode_infidelity(e.residuals, trap_.mean_occupation, cfg_.aggregation);
        return e;
    }

    /// Total slot violation of continuous centroid times (0 when feasible).
    double violation(std::span<const double> times) const {
        const double lo = static_cast<double>(lo_slot_) / rate_;
        const double hi = static_cast<double>(hi_slot_) / rate_;
        double v = 0.0;
        std::vector<int> order(times.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return times[a] < times[b]; });
        for (std::size_t i = 0; i < order.size(); ++i) {
            const int k = order[i];
            const double half = 0.5 * static_cast<double>(blocks_[k].n - 1) / rate_;
            v += std::max(0.0, lo - (times[k] - half)) + std::max(0.0, times[k] + half - hi);
            if (i > 0) {
                const int p = order[i - 1];
                const double need = 0.5 * static_cast<double>(blocks_[p].n + blocks_[k].n) / rate_;
                v += std::max(0.0, need - (times[k] - times[p]));
            }
        }
        return v * rate_;
    }

    /// Unsnapped ODE evaluation: blocks keep the grid spacing but start anywhere.
    Evaluation unsnapped(std::span<const double> times) const {
        std::vector<Impulse> kicks;
        for (int k = 0; k < groups(); ++k) {
            const long n = blocks_[k].n;
            for (long m = 0; m < n; ++m)
                kicks.push_back({times[k] + (m - 0.5 * static_cast<double>(n - 1)) / rate_,
                                 static_cast<double>(blocks_[k].sign)});
        }
        const TrajectorySet set = simulate_gate(kicks, trap_, sim_);
        Evaluation e;
        e.residuals = ode_residuals(set);
        e.cost = ode_infidelity(e.residuals, trap_.mean_occupation, cfg_.aggregation);
        return e;
    }

    /// Unsnapped ODE cost; infeasible timings map to a large penalty.
    double continuous(std::span<const double> times) const {
        const double v = violation(times);
        if (v > 0) return kInfeasible * (1.0 + v);
        return unsnapped(times).cost.total;
    }

    PulseSequence sequence(const std::vector<long>& starts) const {
        PulseSequence seq;
        seq.window_begin = 0.0;
        seq.gate_time = window_end_;
        for (int k = 0; k < groups(); ++k) {
            const double centroid = (static_cast<double>(starts[k]) + 0.5 * static_cast<double>(blocks_[k].n - 1)) / rate_;
            seq.groups.push_back({blocks_[k].z, centroid});
        }
        std::stable_sort(seq.groups.begin(), seq.groups.end(),
                         [](const PulseGroup& a, const PulseGroup& b) { return a.time < b.time; });
        return seq;
    }

private:
    struct Block {
        long n;
        int sign;
        long z;
    };
    TrapConfiguration trap_;
    LocalSearchConfig cfg_;
    PulseSequence input_;
    KickTrain input_train_;
    std::vector<Block> blocks_;
    std::vector<long> input_starts_;
    SimulationOptions sim_;
    double rate_ = 0.0, window_end_ = 0.0;
    long lo_slot_ = 0, hi_slot_ = 0;
};

// Cost of an OdeResiduals-shaped set of end-of-gate quantities.
double residual_cost(const double* phase, const double (*dx)[2], const double (*dv)[2], double nbar,
                     Aggregation agg) {
    double best = kInf;
    static constexpr double ideal[4] = {kQuarterPi, -kQuarterPi, -kQuarterPi, kQuarterPi};
    for (double s : {1.0, -1.0}) {
        double lo = kInf, hi = -kInf;
        for (int b = 0; b < 4; ++b) {
            const double r = phase[b] - s * ideal[b];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        best = std::min(best, 0.5 * (hi - lo));
    }
    double a0 = 0.0, a1 = 0.0;
    for (int b = 0; b < 4; ++b) {
        const double p0 = 0.5 * (dx[b][0] * dx[b][0] + dv[b][0] * dv[b][0]);
        const double p1 = 0.5 * (dx[b][1] * dx[b][1] + dv[b][1] * dv[b][1]);
        if (agg == Aggregation::WorstCase) {
            a0 = std::max(a0, p0);
            a1 = std::max(a1, p1);
        } else {
            a0 += 0.25 * p0;
            a1 += 0.25 * p1;
        }
    }
    return (2.0 / 3.0) * best * best + (4.0 / 3.0) * (0.5 + nbar) * (a0 + a1);
}

constexpr int kResidualCount = 20;

// Least-squares proxy of the ODE cost: centred phase deviations for a fixed
// sign of the target phase, then every basis state's displacement.
Eigen::VectorXd residual_vector(const OdeResiduals& r, double sign, double nbar) {
    static constexpr double ideal[4] = {kQuarterPi, -kQuarterPi, -kQuarterPi, kQuarterPi};
    Eigen::VectorXd v(kResidualCount);
    double mean = 0.0;
    for (int b = 0; b < 4; ++b) mean += 0.25 * (r.phase[b] - sign * ideal[b]);
    const double wp = std::sqrt(2.0 / 3.0), wd = std::sqrt((2.0 / 3.0) * (0.5 + nbar));
    for (int b = 0; b < 4; ++b) v[b] = wp * (r.phase[b] - sign * ideal[b] - mean);
    int i = 4;
    for (int b = 0; b < 4; ++b)
        for (int ion = 0; ion < 2; ++ion) {
            v[i++] = wd * r.dx[b][ion];
            v[i++] = wd * r.dv[b][ion];
        }
    return v;
}

double target_sign(const OdeResiduals& r) {
    double best = kInf, sign = 1.0;
    static constexpr double ideal[4] = {kQuarterPi, -kQuarterPi, -kQuarterPi, kQuarterPi};
    for (double s : {1.0, -1.0}) {
        double lo = kInf, hi = -kInf;
        for (int b = 0; b < 4; ++b) {
            lo = std::min(lo, r.phase[b] - s * ideal[b]);
            hi = std::max(hi, r.phase[b] - s * ideal[b]);
        }
        if (hi - lo < best) {
            best = hi - lo;
            sign = s;
        }
    }
    return sign;
}

struct Candidate {
    double cost;
    std::vector<int> shift;  // per block, in block order
    bool operator<(const Candidate& o) const {
        if (cost != o.cost) return cost < o.cost;
        return shift < o.shift;
    }
};

// Linear-physics response of the end-of-gate quantities to integer block
// shifts, anchored on an ODE evaluation so the Coulomb correction is kept fixed.
class ShiftSurrogate {
public:
    ShiftSurrogate(const Problem& pb, const std::vector<long>& starts, const Evaluation& base)
        : pb_(pb), base_(base) {
        const ModeStructure modes = normal_modes(pb.trap());
        const double eta = pb.trap().effective_lamb_dicke();
        kick_ = pb.config().simulation.kick_factor * std::numbers::sqrt2 * eta;
        P_ = modes.mode_count();
        n_ = pb.groups();
        if (n_ > kMaxGroups) throw LocalOptError("shift screening supports at most 64 groups");
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), 0);
        std::sort(order_.begin(), order_.end(), [&](int a, int b) { return starts[a] < starts[b]; });
        for (int j = 0; j < n_; ++j) start_.push_back(starts[order_[j]]);
        for (int j = 0; j < n_; ++j) len_.push_back(pb.pairs(order_[j]));
        const double dt = 1.0 / pb.rate();
        for (int p = 0; p < P_; ++p) {
            const double w = modes.ratio(p);
            omega_.push_back(w);
            endphase_.push_back(std::polar(1.0, w * pb.window_end()));
            std::vector<cplx> S(n_);
            for (int j = 0; j < n_; ++j) {
                cplx s = 0.0;
                const int k = order_[j];
                for (long m = 0; m < len_[j]; ++m) s += std::polar(1.0, -w * (start_[j] + m) * dt);
                S[j] = static_cast<double>(pb.sign(k)) * s;
            }
            S_.push_back(S);
            std::vector<cplx> pair(static_cast<std::size_t>(n_) * n_);
            for (int l = 0; l < n_; ++l)
                for (int j = l + 1; j < n_; ++j) pair[l * n_ + j] = std::conj(S[j]) * S[l];
            pair_.push_back(pair);
            for (int i = 0; i < 2; ++i) b_[p][i] = modes.coupling(p, i);
            wdt_.push_back(w * dt);
        }
        for (int s = 0; s < 4; ++s) {
            const double sa = (s & 2) ? -1.0 : 1.0, sb = (s & 1) ? -1.0 : 1.0;
            for (int p = 0; p < P_; ++p) {
                const double bs = b_[p][0] * sa + b_[p][1] * sb;
                for (int i = 0; i < 2; ++i) m_[s][i][p] = b_[p][i] * bs;
                phasecoef_[s][p] = kick_ * kick_ * bs * bs / (2.0 * omega_[p]);
            }
        }
        for (int p = 0; p < P_; ++p) {
            cplx a = 0.0;
            for (int j = 0; j < n_; ++j) a += S_[p][j];
            const cplx e = endphase_[p] * a;
            q0_[p] = kick_ * e.imag() / omega_[p];
            v0_[p] = kick_ * e.real();
        }
    }

    /// The best `keep` shift vectors within +-radius by surrogate cost.
    std::vector<Candidate> screen(int radius, int keep, bool parallel, long& evaluations) const {
        const int width = 2 * radius + 1;
        // Rotation tables indexed by shift + 2 radius.
        std::vector<std::vector<cplx>> rot(P_), rel(P_);
        for (int p = 0; p < P_; ++p) {
            for (int d = -2 * radius; d <= 2 * radius; ++d) {
                rot[p].push_back(std::polar(1.0, -wdt_[p] * d));
                rel[p].push_back(std::polar(1.0, wdt_[p] * d));
            }
        }
        std::vector<std::vector<Candidate>> found(width);
        std::vector<long> counts(width, 0);
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (int first = 0; first < width; ++first) {
            Walker w(*this, radius, keep, rot, rel);
            w.run(first - radius);
            found[first] = std::move(w.best);
            counts[first] = w.leaves;
        }
        std::vector<Candidate> all;
        for (int f = 0; f < width; ++f) {
            evaluations += counts[f];
            all.insert(all.end(), found[f].begin(), found[f].end());
        }
        std::sort(all.begin(), all.end());
        if (static_cast<int>(all.size()) > keep) all.resize(keep);
        return all;
    }

    /// Maps a block-order shift vector to per-group starts.
    std::vector<long> starts(const std::vector<int>& shift) const {
        std::vector<long> s(n_);
        for (int j = 0; j < n_; ++j) s[order_[j]] = start_[j] + shift[j];
        return s;
    }

private:
    struct Walker {
        Walker(const ShiftSurrogate& s, int r, int k, const std::vector<std::vector<cplx>>& ro,
               const std::vector<std::vector<cplx>>& re)
            : sg(s), radius(r), keep(k), rot(ro), rel(re), shift(s.n_, 0) {}

        const ShiftSurrogate& sg;
        int radius;
        int keep;
        const std::vector<std::vector<cplx>>& rot;
        const std::vector<std::vector<cplx>>& rel;
        std::vector<int> shift;
        std::vector<Candidate> best;  // max-heap on cost
        long leaves = 0;
        cplx A[2][kMaxGroups + 1]{};    // partial displacement sums per depth
        double X[2][kMaxGroups + 1]{};  // partial cross-phase change per depth

        void run(int first) {
            for (int p = 0; p < sg.P_; ++p) {
                A[p][0] = 0.0;
                for (int j = 0; j < sg.n_; ++j) A[p][0] += sg.S_[p][j];
                X[p][0] = 0.0;
            }
            place(0, first, first);
        }

        bool allowed(int j, int d) const {
            const long s = sg.start_[j] + d;
            if (s < sg.pb_.lo_slot() || s + sg.len_[j] - 1 > sg.pb_.hi_slot()) return false;
            if (j > 0 && sg.start_[j - 1] + shift[j - 1] + sg.len_[j - 1] > s) return false;
            return true;
        }

        void place(int j, int lo, int hi) {
            for (int d = lo; d <= hi; ++d) {
                if (!allowed(j, d)) continue;
                shift[j] = d;
                for (int p = 0; p < sg.P_; ++p) {
                    A[p][j + 1] = A[p][j] + (rot[p][d + 2 * radius] - 1.0) * sg.S_[p][j];
                    double x = X[p][j];
                    const cplx* pr = &sg.pair_[p][0];
                    for (int l = 0; l < j; ++l) {
                        const cplx& c = pr[l * sg.n_ + j];
                        const cplx& e = rel[p][d - shift[l] + 2 * radius];
                        x += (e * c).imag() - c.imag();
                    }
                    X[p][j + 1] = x;
                }
                if (j + 1 == sg.n_) {
                    leaf();
                } else {
                    place(j + 1, -radius, radius);
                }
            }
        }

        void leaf() {
            ++leaves;
            const int n = sg.n_;
            double q[4], v[4];
            for (int p = 0; p < sg.P_; ++p) {
                const cplx e = sg.endphase_[p] * A[p][n];
                q[p] = sg.kick_ * e.imag() / sg.omega_[p] - sg.q0_[p];
                v[p] = sg.kick_ * e.real() - sg.v0_[p];
            }
            double phase[4], dx[4][2], dv[4][2];
            for (int s = 0; s < 4; ++s) {
                double ph = sg.base_.residuals.phase[s];
                for (int p = 0; p < sg.P_; ++p) ph -= sg.phasecoef_[s][p] * X[p][n];
                phase[s] = ph;
                for (int i = 0; i < 2; ++i) {
                    double x = sg.base_.residuals.dx[s][i], u = sg.base_.residuals.dv[s][i];
                    for (int p = 0; p < sg.P_; ++p) {
                        x += sg.m_[s][i][p] * q[p];
                        u += sg.m_[s][i][p] * v[p];
                    }
                    dx[s][i] = x;
                    dv[s][i] = u;
                }
            }
            const double c = residual_cost(phase, dx, dv, sg.pb_.trap().mean_occupation,
                                           sg.pb_.config().aggregation);
            if (static_cast<int>(best.size()) < keep) {
                best.push_back({c, shift});
                std::push_heap(best.begin(), best.end());
            } else if (Candidate{c, shift} < best.front()) {
                std::pop_heap(best.begin(), best.end());
                best.back() = {c, shift};
                std::push_heap(best.begin(), best.end());
            }
        }
    };

    const Problem& pb_;
    Evaluation base_;
    double kick_ = 0.0;
    int P_ = 0, n_ = 0;
    std::vector<int> order_;
    std::vector<long> start_, len_;
    std::vector<double> omega_, wdt_;
    std::vector<cplx> endphase_;
    std::vector<std::vector<cplx>> S_, pair_;
    double b_[4][2]{};
    double m_[4][2][4]{};
    double phasecoef_[4][4]{};
    double q0_[4]{}, v0_[4]{};
};

class Search {
public:
    Search(const GateSolution& sol, const TrapConfiguration& trap, const LocalSearchConfig& cfg)
        : pb_(sol, trap, cfg), cfg_(cfg), source_(sol) {}

    bool budget_left() const { return evaluations_ < cfg_.max_evaluations; }

    std::optional<Evaluation> evaluate(const std::vector<long>& starts) {
        ++evaluations_;
        return pb_.evaluate(starts);
    }

    void offer(const std::vector<long>& starts, const Evaluation& e) {
        if (e.cost.total < best_.cost.total) {
            best_ = e;
            best_starts_ = starts;
        }
    }

    void log(const std::string& step) {
        result_.log.push_back({static_cast<int>(result_.log.size()), step, evaluations_, best_.cost.total});
    }

    void start() {
        const auto e = evaluate(pb_.input_starts());
        if (!e) throw LocalOptError("input kick train leaves the refinement window");
        result_.input = e->cost;
        best_ = *e;
        best_starts_ = pb_.input_starts();
        log("input");
    }

    void consider_continuous(const std::vector<double>& t) {
        continuous_ = t;
        const auto snapped = pb_.snap(t);
        if (!budget_left()) return;
        if (const auto e = evaluate(snapped)) {
            offer(snapped, *e);
            if (!continuous_base_ || e->cost.total < continuous_base_->second.cost.total)
                continuous_base_ = std::make_pair(snapped, *e);
        }
    }

    /// Levenberg-Marquardt on the unsnapped ODE residuals with a finite-difference Jacobian.
    void levenberg_marquardt() {
        const int n = pb_.groups();
        std::vector<double> t = continuous_.empty() ? pb_.input().times() : continuous_;
        if (pb_.violation(t) > 0) return;
        const double nbar = pb_.trap().mean_occupation;
        Evaluation cur = pb_.unsnapped(t);
        ++evaluations_;
        const double sign = target_sign(cur.residuals);
        Eigen::VectorXd r = residual_vector(cur.residuals, sign, nbar);
        double f = r.squaredNorm();
        const double h = cfg_.slot_tolerance / pb_.rate();
        double lambda = 1e-3;
        Eigen::MatrixXd J(kResidualCount, n);
        for (int it = 0; it < cfg_.newton_iterations && budget_left(); ++it) {
            std::vector<Eigen::VectorXd> cols(n);
#pragma omp parallel for schedule(dynamic) if (cfg_.parallel)
            for (int k = 0; k < n; ++k) {
                std::vector<double> tk = t;
                tk[k] += h;
                cols[k] = residual_vector(pb_.unsnapped(tk).residuals, sign, nbar);
            }
            evaluations_ += n;
            for (int k = 0; k < n; ++k) J.col(k) = (cols[k] - r) / h;
            const Eigen::MatrixXd A = J.transpose() * J;
            const Eigen::VectorXd g = J.transpose() * r;
            bool improved = false;
            for (int tries = 0; tries < 12 && budget_left(); ++tries) {
                Eigen::MatrixXd M = A;
                for (int k = 0; k < n; ++k) M(k, k) += lambda * std::max(A(k, k), 1e-30);
                const Eigen::VectorXd step = M.ldlt().solve(-g);
                std::vector<double> trial = t;
                for (int k = 0; k < n; ++k) trial[k] += step[k];
                if (pb_.violation(trial) > 0) {
                    lambda *= 4.0;
                    continue;
                }
                const Evaluation e = pb_.unsnapped(trial);
                ++evaluations_;
                const Eigen::VectorXd rt = residual_vector(e.residuals, sign, nbar);
                if (rt.squaredNorm() < f) {
                    t = trial;
                    r = rt;
                    f = rt.squaredNorm();
                    cur = e;
                    lambda = std::max(lambda / 4.0, 1e-9);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if (!improved) break;
        }
        consider_continuous(t);
        log("levenberg-marquardt");
    }

    void simplex() {
        std::vector<double> t = continuous_.empty() ? pb_.input().times() : continuous_;
        // Groups are kept in input order so times map to blocks one-to-one.
        const double step = cfg_.simplex_step / pb_.rate();
        std::vector<double> steps(t.size(), step);
        for (int pass = 0; pass < cfg_.simplex_passes && budget_left(); ++pass) {
            NelderMeadOptions opt;
            opt.max_evaluations = std::min(cfg_.simplex_evaluations, cfg_.max_evaluations - evaluations_);
            opt.x_tolerance = cfg_.slot_tolerance / pb_.rate();
            const auto r = nelder_mead([&](std::span<const double> x) { return pb_.continuous(x); }, t, steps, opt);
            evaluations_ += r.evaluations;
            t = r.x;
            consider_continuous(t);
            log("simplex pass " + std::to_string(pass));
        }
    }

    void screened_shifts() {
        if (cfg_.screen_radius <= 0) return;
        std::vector<long> base = best_starts_;
        Evaluation base_eval = best_;
        if (continuous_base_ && continuous_base_->first != best_starts_) {
            // Start from the snapped continuous optimum; it sits closest to a solution.
            base = continuous_base_->first;
            base_eval = continuous_base_->second;
        }
        for (int round = 0; round < cfg_.screen_rounds && budget_left(); ++round) {
            const ShiftSurrogate sg(pb_, base, base_eval);
            const auto cands = sg.screen(cfg_.screen_radius, cfg_.screen_candidates, cfg_.parallel,
                                         result_.surrogate_evaluations);
            std::vector<std::vector<long>> starts;
            for (const auto& c : cands) {
                auto s = sg.starts(c.shift);
                if (s != base) starts.push_back(std::move(s));
            }
            const long room = cfg_.max_evaluations - evaluations_;
            if (static_cast<long>(starts.size()) > room) starts.resize(std::max(0L, room));
            std::vector<std::optional<Evaluation>> evals(starts.size());
            const int count = static_cast<int>(starts.size());
#pragma omp parallel for schedule(dynamic) if (cfg_.parallel)
            for (int i = 0; i < count; ++i) evals[i] = pb_.evaluate(starts[i]);
            evaluations_ += count;
            int pick = -1;
            double pick_cost = base_eval.cost.total;
            for (int i = 0; i < count; ++i) {
                if (!evals[i]) continue;
                offer(starts[i], *evals[i]);
                if (evals[i]->cost.total < pick_cost) {
                    pick_cost = evals[i]->cost.total;
                    pick = i;
                }
            }
            log("shift screen round " + std::to_string(round));
            if (pick < 0) {
                if (base == best_starts_) break;
                base = best_starts_;
                base_eval = best_;
                continue;
            }
            base = starts[pick];
            base_eval = *evals[pick];
        }
    }

    void exhaustive(int radius) {
        if (radius <= 0) return;
        const int n = pb_.groups();
        const double combos = std::pow(2.0 * radius + 1.0, n);
        if (combos > static_cast<double>(cfg_.max_evaluations))
            throw LocalOptError("grid-shift enumeration needs " + std::to_string(static_cast<long long>(combos)) +
                                " evaluations, above the budget; use a smaller radius");
        const std::vector<long> centre = best_starts_;
        const long total = static_cast<long>(combos);
        const int width = 2 * radius + 1;
        std::vector<std::optional<Evaluation>> evals(total);
        std::vector<std::vector<long>> starts(total);
        for (long c = 0; c < total; ++c) {
            long rest = c;
            starts[c] = centre;
            for (int k = 0; k < n; ++k) {
                starts[c][k] += rest % width - radius;
                rest /= width;
            }
        }
        // The centre is the incumbent and has been evaluated already.
        const long centre_index = (total - 1) / 2;
#pragma omp parallel for schedule(dynamic) if (cfg_.parallel)
        for (long c = 0; c < total; ++c)
            if (c != centre_index) evals[c] = pb_.evaluate(starts[c]);
        for (long c = 0; c < total; ++c) {
            if (!evals[c]) continue;
            ++evaluations_;
            offer(starts[c], *evals[c]);
        }
        log("grid shift enumeration r=" + std::to_string(radius));
    }

    LocalResult finish() {
        LocalResult& r = result_;
        r.evaluations = evaluations_;
        r.budget_exhausted = !budget_left();
        r.ode = best_.cost;
        GateSolution s = source_;
        s.sequence = pb_.sequence(best_starts_);
        const ModeStructure modes = normal_modes(pb_.trap());
        s.breakdown = truncated_infidelity(s.sequence, cost_model(pb_.trap(), modes));
        s.min_rate = safe_min_rate(s.sequence);
        s.meta.phase = "local";
        s.meta.evaluations = evaluations_;
        s.meta.budget_exhausted = r.budget_exhausted;
        r.solution = std::move(s);
        return std::move(r);
    }

private:
    Problem pb_;
    LocalSearchConfig cfg_;
    GateSolution source_;
    LocalResult result_;
    Evaluation best_;
    std::vector<long> best_starts_;
    std::optional<std::pair<std::vector<long>, Evaluation>> continuous_base_;
    std::vector<double> continuous_;
    long evaluations_ = 0;
};

}  // namespace

void LocalSearchConfig::validate() const {
    if (!(rate > 0)) throw ConfigError("local search repetition rate must be positive");
    if (!(extension >= 1)) throw ConfigError("gate-time extension factor must be at least 1");
    if (!(simplex_step > 0) || !(slot_tolerance > 0) || simplex_evaluations < 1) throw ConfigError("simplex settings must be positive");
    if (max_evaluations < 1) throw ConfigError("local search needs at least one evaluation");
    if (newton_iterations < 0 || shift_radius < 0 || screen_radius < 0 || screen_candidates < 0 || screen_rounds < 0 ||
        simplex_passes < 0)
        throw ConfigError("local search counts must be non-negative");
    if (screen_radius > 20) throw ConfigError("screen radius above 20 slots is not supported");
}

LocalResult optimize_local(const GateSolution& solution, const TrapConfiguration& trap,
                           const LocalSearchConfig& config) {
    Search s(solution, trap, config);
    s.start();
    if (s.budget_left()) s.levenberg_marquardt();
    if (s.budget_left()) s.simplex();
    if (s.budget_left()) s.screened_shifts();
    if (config.shift_radius > 0 && s.budget_left()) s.exhaustive(config.shift_radius);
    return s.finish();
}

LocalResult enumerate_grid_shifts(const GateSolution& solution, const TrapConfiguration& trap,
                                  const LocalSearchConfig& config) {
    Search s(solution, trap, config);
    s.start();
    s.exhaustive(config.shift_radius);
    return s.finish();
}

OdeInfidelity snapped_cost(const PulseSequence& seq, const TrapConfiguration& trap,
                           const LocalSearchConfig& config) {
    SimulationOptions opt = config.simulation;
    opt.parallel = config.parallel;
    const TrajectorySet set = simulate_sequence(seq, config.rate, trap, opt);
    return ode_infidelity(set, trap.mean_occupation, config.aggregation);
}

}  // namespace fastgate
