#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fastgate/error_model.hpp"
#include "fastgate/global_opt.hpp"
#include "fastgate/local_opt.hpp"
#include "fastgate/ode_dynamics.hpp"
#include "fastgate/pipeline.hpp"
#include "fastgate/serialization.hpp"
#include "fastgate/trap_model.hpp"
#include "fastgate/units.hpp"

namespace fs = std::filesystem;
using namespace fastgate;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<double> frep;
    std::optional<std::string> scheme;
    std::optional<double> gate_time;  // trap periods
    std::optional<int> ions;
    std::optional<double> chi;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "run manifest (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--frep", c.frep, "laser repetition rate in Hz");
    cmd->add_option("--scheme", c.scheme, "gzc, frag, gpg:N or apg:N");
    cmd->add_option("--gate-time", c.gate_time, "gate time in trap periods");
    cmd->add_option("--ions", c.ions, "number of ions");
    cmd->add_option("--chi", c.chi, "mode difference for a two-mode specification");
}

RunManifest manifest_from(const Common& c) {
    RunManifest m = c.config.empty() ? RunManifest{} : read_manifest(c.config);
    if (c.seed) m.seed = *c.seed;
    if (!c.out.empty()) m.output_dir = c.out;
    if (c.frep) m.repetition_rates_hz = {*c.frep};
    if (c.scheme) {
        try {
            m.global.scheme = parse_scheme(*c.scheme);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (c.gate_time) m.global.gate_time = periods_to_time(*c.gate_time);
    if (c.ions) m.trap.ion_count = *c.ions;
    if (c.chi) m.trap.chi = *c.chi;
    return m;
}

void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
    if (out_dir.empty()) {
        std::cout << text;
        return;
    }
    write_text(fs::path(out_dir) / name, text);
    std::cerr << "wrote " << (fs::path(out_dir) / name).string() << '\n';
}

double require_rate(const RunManifest& m) {
    if (m.repetition_rates_hz.empty()) throw ConfigError("a repetition rate is required (--frep)");
    return m.rate(m.repetition_rates_hz.front());
}

int cmd_modes(const Common& c) {
    RunManifest m = manifest_from(c);
    m.trap.validate();
    const ModeStructure modes = normal_modes(m.trap);
    Json j = modes;
    if (modes.mode_count() == 2) j["chi"] = chi_from_modes(modes);
    emit(c.out, "modes.json", dump(j));
    return 0;
}

int cmd_optimize(const Common& c) {
    RunManifest m = manifest_from(c);
    m.trap.validate();
    m.global.seed = m.seed;
    m.global.validate();
    const ModeStructure modes = normal_modes(m.trap);
    const GlobalResult g = optimize_global(m.global, m.trap, modes);
    if (g.solution.meta.no_solution) throw GlobalOptError("no eligible solution: " + g.solution.meta.diagnostics);
    if (!c.out.empty()) {
        write_manifest(fs::path(c.out) / "manifest.json", m);
        write_text(fs::path(c.out) / "candidates.json", dump(Json(g.candidates)));
        ResultRecord rec;
        rec.stages = g.stages;
        write_text(fs::path(c.out) / "search_log.jsonl", search_log(rec));
    }
    emit(c.out, "solution.json", dump(Json(g.solution)));
    std::fprintf(stderr, "cost %.3e  f_min %.1f per period  pulse pairs %ld\n", g.solution.breakdown.total,
                 rate_per_period(g.solution.min_rate), g.solution.sequence.total_pulse_pairs());
    return 0;
}

int cmd_refine(const Common& c, const std::string& solution_path) {
    RunManifest m = manifest_from(c);
    LocalSearchConfig cfg = m.local;
    cfg.rate = require_rate(m);
    const GateSolution input = read_solution(solution_path);
    const LocalResult r = optimize_local(input, m.trap, cfg);
    Json j = r.solution;
    if (!c.out.empty()) {
        Json log = Json::array();
        for (const auto& s : r.log) log.push_back(s);
        write_text(fs::path(c.out) / "refine_log.json", dump(log));
        write_text(fs::path(c.out) / "refined_ode.json", dump(Json{{"input", r.input}, {"output", r.ode}}));
    }
    emit(c.out, "refined.json", dump(j));
    std::fprintf(stderr, "ODE cost %.3e -> %.3e in %ld evaluations\n", r.input.total, r.ode.total, r.evaluations);
    return 0;
}

int cmd_simulate(const Common& c, const std::string& solution_path, const std::string& coulomb, bool trajectories) {
    RunManifest m = manifest_from(c);
    m.trap.validate();
    const GateSolution s = read_solution(solution_path);
    SimulationOptions opt = m.local.simulation;
    opt.coulomb = coulomb == "linearized" ? CoulombModel::Linearized : CoulombModel::Full;
    opt.record = trajectories;
    const TrajectorySet set = m.repetition_rates_hz.empty()
                                  ? simulate_sequence(s.sequence, m.trap, opt)
                                  : simulate_sequence(s.sequence, require_rate(m), m.trap, opt);
    const OdeInfidelity inf = ode_infidelity(set, m.trap.mean_occupation, m.local.aggregation);
    if (trajectories) {
        if (c.out.empty()) throw IoError("--trajectories needs --out");
        export_trajectories(set, normal_modes(m.trap), fs::path(c.out) / "trajectories");
    }
    emit(c.out, "ode.json", dump(Json(inf)));
    return 0;
}

int cmd_budget(const Common& c, const std::vector<std::string>& solutions, std::vector<double> eps,
               const std::vector<double>& noise, double cutoff) {
    for (double d : noise) eps.push_back(epsilon_from_intensity_noise(d));
    if (eps.empty()) throw ConfigError("give --eps or --intensity-noise");
    std::vector<GateSolution> sols;
    for (const auto& p : solutions) sols.push_back(read_solution(p));
    const BudgetTable t = error_budget_table(sols, eps, cutoff);
    if (!c.out.empty()) write_text(fs::path(c.out) / "budget.csv", t.to_csv());
    std::cout << t.to_text();
    return 0;
}

int cmd_report(const std::string& record_path) {
    const ResultRecord r = read_record(record_path, true);
    const auto& m = r.manifest;
    std::printf("scheme %s  T_G %.4g periods  seed %llu\n", m.global.scheme.to_string().c_str(),
                time_to_periods(m.global.gate_time), static_cast<unsigned long long>(m.seed));
    if (r.global)
        std::printf("phase 1  truncated %.3e  f_min %.1f per period  N %ld\n", r.global->breakdown.total,
                    rate_per_period(r.global->min_rate), r.global->sequence.total_pulse_pairs());
    if (r.linear_ode) std::printf("ODE linearized  %.3e\n", r.linear_ode->total);
    if (r.full_ode) std::printf("ODE full        %.3e\n", r.full_ode->total);
    for (const auto& rate : r.rates) {
        std::printf("f_rep %.4g Hz  snapped %s", rate.repetition_rate_hz,
                    rate.snapped ? std::to_string(rate.snapped->total).c_str() : "n/a");
        if (rate.local_ode) std::printf("  phase 2 %.3e", rate.local_ode->total);
        std::printf("\n");
    }
    if (r.budget) std::printf("%s", r.budget->to_text().c_str());
    for (const auto& n : r.notes) std::printf("note: %s\n", n.c_str());
    if (!r.complete()) std::printf("failed at %s: %s\n", r.failed_stage.c_str(), r.failure.c_str());
    std::printf("record verified\n");
    return 0;
}

int cmd_run(const Common& c) {
    const RunManifest m = manifest_from(c);
    const RunOutcome o = run_pipeline(m);
    const auto& r = o.record;
    if (r.global) std::fprintf(stderr, "phase 1 %.3e\n", r.global->breakdown.total);
    if (r.full_ode) std::fprintf(stderr, "full Coulomb %.3e\n", r.full_ode->total);
    for (const auto& rate : r.rates)
        if (rate.local_ode) std::fprintf(stderr, "phase 2 at %.4g Hz %.3e\n", rate.repetition_rate_hz, rate.local_ode->total);
    if (m.output_dir.empty()) std::cout << dump(Json(r));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fast trapped-ion gate design"};
    app.require_subcommand(1);

    Common common;
    std::string solution, record, coulomb = "full";
    std::vector<std::string> solutions;
    std::vector<double> eps, noise;
    double cutoff = kDefaultRegimeCutoff;
    bool trajectories = false;

    auto* modes = app.add_subcommand("modes", "normal modes of the trap");
    add_common(modes, common);
    auto* optimize = app.add_subcommand("optimize", "global search under the truncated cost");
    add_common(optimize, common);
    auto* refine = app.add_subcommand("refine", "local refinement against the ODE at one repetition rate");
    add_common(refine, common);
    refine->add_option("--solution", solution, "solution JSON")->required()->check(CLI::ExistingFile);
    auto* simulate = app.add_subcommand("simulate", "ODE infidelity of a solution");
    add_common(simulate, common);
    simulate->add_option("--solution", solution, "solution JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--coulomb", coulomb, "full or linearized")->check(CLI::IsMember({"full", "linearized"}));
    simulate->add_flag("--trajectories", trajectories, "export per-basis trajectories to --out");
    auto* budget = app.add_subcommand("budget", "fidelity bounds under pulse errors");
    add_common(budget, common);
    budget->add_option("--solution", solutions, "solution JSON files")->required()->check(CLI::ExistingFile);
    budget->add_option("--eps", eps, "transition error probabilities");
    budget->add_option("--intensity-noise", noise, "relative intensity fluctuations");
    budget->add_option("--cutoff", cutoff, "largest N * eps treated as in regime");
    auto* report = app.add_subcommand("report", "verify and summarise a result record");
    report->add_option("record", record, "record.json")->required()->check(CLI::ExistingFile);
    auto* run = app.add_subcommand("run", "full pipeline from a manifest");
    add_common(run, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(Stage::Config);
    }

    try {
        if (*modes) return cmd_modes(common);
        if (*optimize) return cmd_optimize(common);
        if (*refine) return cmd_refine(common, solution);
        if (*simulate) return cmd_simulate(common, solution, coulomb, trajectories);
        if (*budget) return cmd_budget(common, solutions, eps, noise, cutoff);
        if (*report) return cmd_report(record);
        if (*run) return cmd_run(common);
    } catch (const Error& e) {
        std::cerr << "error [" << stage_name(e.stage()) << "]: " << e.what() << '\n';
        return exit_code(e.stage());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
