#include "fastgate/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <sstream>

#include "fastgate/serialization.hpp"

namespace fastgate {

namespace {

// Library failures inside a stage are reported as that stage's error.
template <class F>
void guarded(Stage stage, F&& f) {
    try {
        f();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(stage, e.what());
    }
}

class Timer {
public:
    explicit Timer(std::vector<StageTiming>& out) : out_(out) {}

    template <class F>
    void run(const std::string& name, Stage stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            guarded(stage, f);
        } catch (...) {
            record(name, t0);
            throw;
        }
        record(name, t0);
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - t0;
        out_.push_back({name, d.count()});
    }

    std::vector<StageTiming>& out_;
};

std::string format_hz(double hz) {
    std::ostringstream os;
    os << hz / 1e6 << " MHz";
    return os.str();
}

void refine_rate(const RunManifest& m, const ResultRecord& rec, RateResult& out) {
    LocalSearchConfig cfg = m.local;
    cfg.rate = out.rate;
    const GateSolution& global = *rec.global;
    try {
        out.snapped = snapped_cost(global.sequence, m.trap, cfg);
    } catch (const SchemeError& e) {
        out.note = std::string("global solution does not fit the pulse grid: ") + e.what();
    }
    if (!m.refine) return;

    std::vector<const GateSolution*> inputs;
    for (const auto& c : rec.candidates) {
        if (static_cast<int>(inputs.size()) >= m.refine_candidates) break;
        inputs.push_back(&c);
    }
    if (inputs.empty()) inputs.push_back(&global);

    std::string failures;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        LocalResult r;
        try {
            r = optimize_local(*inputs[i], m.trap, cfg);
        } catch (const SchemeError& e) {
            failures += (failures.empty() ? "" : "; ") + std::string(e.what());
            continue;
        }
        if (!out.local_ode || r.ode.total < out.local_ode->total) {
            out.local = r.solution;
            out.local_ode = r.ode;
            out.local_input = r.input;
            out.log = r.log;
            out.local_candidate = inputs.size() == 1 && rec.candidates.empty() ? -1 : static_cast<int>(i);
        }
        out.local_evaluations += r.evaluations;
    }
    if (!out.local) {
        throw LocalOptError("no candidate fits the pulse grid at " + format_hz(out.repetition_rate_hz) + ": " +
                            failures);
    }
}

void write_artifacts(const RunOutcome& o) {
    const std::filesystem::path dir = o.record.manifest.output_dir;
    write_record(dir / "record.json", o.record);
    write_manifest(dir / "manifest.json", o.record.manifest);
    write_text(dir / "search_log.jsonl", search_log(o.record));
    if (o.record.budget) {
        write_text(dir / "budget.csv", o.record.budget->to_csv());
        write_text(dir / "budget.txt", o.record.budget->to_text());
    }
    Json t = Json::array();
    for (const auto& s : o.timing) t.push_back(Json{{"stage", s.stage}, {"seconds", s.seconds}});
    write_text(dir / "timing.json", dump(t));
}

}  // namespace

void RunManifest::validate() const {
    trap.validate();
    global.validate();
    LocalSearchConfig probe = local;
    probe.rate = 1.0;
    probe.validate();
    if (refine_candidates < 1) throw ConfigError("refine_candidates must be at least 1");
    for (double hz : repetition_rates_hz)
        if (!(hz > 0) || !std::isfinite(hz)) throw ConfigError("repetition rates must be positive");
    for (double e : epsilons)
        if (!(e >= 0) || !(e < 1)) throw ConfigError("pulse error probabilities must lie in [0, 1)");
    if (!(regime_cutoff > 0)) throw ConfigError("regime cutoff must be positive");
}

RunOutcome run_pipeline(const RunManifest& manifest) {
    RunOutcome out;
    ResultRecord& rec = out.record;
    rec.manifest = manifest;
    Timer timer(out.timing);
    try {
        timer.run("config", Stage::Config, [&] { manifest.validate(); });
        timer.run("trap-model", Stage::TrapModel, [&] { rec.modes = normal_modes(manifest.trap); });

        timer.run("global-opt", Stage::GlobalOpt, [&] {
            GlobalSearchConfig cfg = manifest.global;
            cfg.seed = manifest.seed;
            GlobalResult g = optimize_global(cfg, manifest.trap, rec.modes);
            rec.stages = std::move(g.stages);
            rec.candidates = std::move(g.candidates);
            if (g.solution.meta.no_solution) {
                rec.notes.push_back("global search found no eligible solution: " + g.solution.meta.diagnostics);
                return;
            }
            rec.global = std::move(g.solution);
        });

        const bool two_ions = manifest.trap.ion_count == 2;
        if (rec.global && !two_ions)
            rec.notes.push_back("ODE and local stages need two ions; skipped for " +
                                std::to_string(manifest.trap.ion_count));

        if (rec.global && two_ions) {
            timer.run("ode-dynamics", Stage::OdeDynamics, [&] {
                SimulationOptions opt = manifest.local.simulation;
                opt.coulomb = CoulombModel::Linearized;
                rec.linear_ode = ode_infidelity(simulate_sequence(rec.global->sequence, manifest.trap, opt),
                                                manifest.trap.mean_occupation, manifest.local.aggregation);
                opt.coulomb = CoulombModel::Full;
                rec.full_ode = ode_infidelity(simulate_sequence(rec.global->sequence, manifest.trap, opt),
                                              manifest.trap.mean_occupation, manifest.local.aggregation);
            });
            timer.run("local-opt", Stage::LocalOpt, [&] {
                for (double hz : manifest.repetition_rates_hz) {
                    RateResult r;
                    r.repetition_rate_hz = hz;
                    r.rate = manifest.rate(hz);
                    rec.rates.push_back(r);
                    refine_rate(manifest, rec, rec.rates.back());
                }
            });
        }

        timer.run("error-model", Stage::ErrorModel, [&] {
            if (manifest.epsilons.empty()) {
                rec.notes.push_back("no pulse error rates given; error budget skipped");
                return;
            }
            std::vector<GateSolution> sols;
            std::vector<double> ideal;
            if (rec.global) {
                sols.push_back(*rec.global);
                ideal.push_back(rec.global->breakdown.total);
            }
            for (const auto& r : rec.rates) {
                if (!r.local) continue;
                sols.push_back(*r.local);
                ideal.push_back(r.local_ode->total);
            }
            if (sols.empty()) {
                rec.notes.push_back("no solution to budget");
                return;
            }
            rec.budget = error_budget_table(sols, manifest.epsilons, manifest.regime_cutoff, ideal);
        });

        if (!manifest.output_dir.empty()) {
            timer.run("io", Stage::Io, [&] {
                write_artifacts(out);
                if (manifest.export_trajectories && rec.global && two_ions) {
                    SimulationOptions opt = manifest.local.simulation;
                    opt.record = true;
                    const auto set = simulate_sequence(rec.global->sequence, manifest.trap, opt);
                    export_trajectories(set, rec.modes, std::filesystem::path(manifest.output_dir) / "trajectories");
                }
            });
            // Rewrite so timing.json includes the io stage.
            write_artifacts(out);
        }
    } catch (const Error& e) {
        rec.failed_stage = stage_name(e.stage());
        rec.failure = e.what();
        if (!manifest.output_dir.empty() && e.stage() != Stage::Io) {
            try {
                write_artifacts(out);
            } catch (const Error&) {
            }
        }
        throw;
    }
    return out;
}

int exit_code(Stage stage) {
    switch (stage) {
        case Stage::Config: return 2;
        case Stage::TrapModel: return 3;
        case Stage::Schemes: return 4;
        case Stage::GlobalOpt: return 5;
        case Stage::OdeDynamics: return 6;
        case Stage::LocalOpt: return 7;
        case Stage::ErrorModel: return 8;
        case Stage::Io: return 9;
    }
    return 1;
}

}  // namespace fastgate
