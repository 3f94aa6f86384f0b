#include "fastgate/serialization.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <sstream>

namespace fastgate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// JSON has no infinity; non-finite values are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number(const Json& j) { return j.is_null() ? kInf : j.get<double>(); }

template <class T>
Json optional(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

template <class T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key) || j.at(key).is_null()) {
        out.reset();
        return;
    }
    out = j.at(key).get<T>();
}

template <class T>
void read_if(const Json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

const char* architecture_name(Architecture a) {
    return a == Architecture::PaulTrap ? "paul" : "microtrap";
}

Architecture parse_architecture(const std::string& s) {
    if (s == "paul") return Architecture::PaulTrap;
    if (s == "microtrap") return Architecture::MicrotrapArray;
    throw ConfigError("unknown architecture '" + s + "'");
}

const char* coulomb_name(CoulombModel m) { return m == CoulombModel::Full ? "full" : "linearized"; }

CoulombModel parse_coulomb(const std::string& s) {
    if (s == "full") return CoulombModel::Full;
    if (s == "linearized") return CoulombModel::Linearized;
    throw ConfigError("unknown Coulomb model '" + s + "'");
}

const char* aggregation_name(Aggregation a) {
    return a == Aggregation::WorstCase ? "worst_case" : "basis_average";
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "worst_case") return Aggregation::WorstCase;
    if (s == "basis_average") return Aggregation::BasisAverage;
    throw ConfigError("unknown aggregation '" + s + "'");
}

// Wraps library parse errors so callers see a configuration failure.
template <class F>
auto config_guard(const char* what, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad ") + what + ": " + e.what());
    }
}

bool close(double a, double b, double tol) {
    if (a == b) return true;
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

void to_json(Json& j, const TrapConfiguration& v) {
    j = Json{{"architecture", architecture_name(v.architecture)},
             {"ion_count", v.ion_count},
             {"trap_frequency", v.trap_frequency},
             {"ion_mass", v.ion_mass},
             {"inter_trap_distance", v.inter_trap_distance},
             {"lamb_dicke", optional(v.lamb_dicke)},
             {"laser_wavenumber", optional(v.laser_wavenumber)},
             {"mean_occupation", v.mean_occupation},
             {"elementary_charge", v.elementary_charge},
             {"vacuum_permittivity", v.vacuum_permittivity},
             {"chi", optional(v.chi)},
             {"ion_a", v.ion_a},
             {"ion_b", v.ion_b}};
}

void from_json(const Json& j, TrapConfiguration& v) {
    v = TrapConfiguration{};
    if (j.contains("architecture")) v.architecture = parse_architecture(j.at("architecture").get<std::string>());
    read_if(j, "ion_count", v.ion_count);
    read_if(j, "trap_frequency", v.trap_frequency);
    if (j.contains("trap_frequency_hz")) v.trap_frequency = two_pi * j.at("trap_frequency_hz").get<double>();
    read_if(j, "ion_mass", v.ion_mass);
    read_if(j, "inter_trap_distance", v.inter_trap_distance);
    if (j.contains("lamb_dicke")) read_optional(j, "lamb_dicke", v.lamb_dicke);
    read_optional(j, "laser_wavenumber", v.laser_wavenumber);
    read_if(j, "mean_occupation", v.mean_occupation);
    read_if(j, "elementary_charge", v.elementary_charge);
    read_if(j, "vacuum_permittivity", v.vacuum_permittivity);
    read_optional(j, "chi", v.chi);
    read_if(j, "ion_a", v.ion_a);
    read_if(j, "ion_b", v.ion_b);
}

void to_json(Json& j, const ModeStructure& v) {
    Json rows = Json::array();
    for (int p = 0; p < v.coupling.rows(); ++p) {
        Json row = Json::array();
        for (int i = 0; i < v.coupling.cols(); ++i) row.push_back(v.coupling(p, i));
        rows.push_back(row);
    }
    j = Json{{"trap_frequency", v.trap_frequency},
             {"frequencies", v.frequencies},
             {"coupling", rows},
             {"equilibrium_positions", v.equilibrium_positions}};
}

void from_json(const Json& j, ModeStructure& v) {
    v.trap_frequency = j.at("trap_frequency").get<double>();
    v.frequencies = j.at("frequencies").get<std::vector<double>>();
    v.equilibrium_positions = j.at("equilibrium_positions").get<std::vector<double>>();
    const auto& rows = j.at("coupling");
    const int p = static_cast<int>(rows.size());
    const int n = p ? static_cast<int>(rows.at(0).size()) : 0;
    v.coupling.resize(p, n);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < n; ++b) v.coupling(a, b) = rows.at(a).at(b).get<double>();
}

void to_json(Json& j, const SchemeSpec& v) { j = v.to_string(); }
void from_json(const Json& j, SchemeSpec& v) { v = parse_scheme(j.get<std::string>()); }

void to_json(Json& j, const PulseSequence& v) {
    Json groups = Json::array();
    for (const auto& g : v.groups) groups.push_back(Json{{"z", g.z}, {"t", g.time}});
    j = Json{{"groups", groups}, {"gate_time", v.gate_time}, {"window_begin", v.window_begin}};
}

void from_json(const Json& j, PulseSequence& v) {
    v.groups.clear();
    for (const auto& g : j.at("groups")) v.groups.push_back({g.at("z").get<long>(), g.at("t").get<double>()});
    v.gate_time = j.at("gate_time").get<double>();
    v.window_begin = j.at("window_begin").get<double>();
}

void to_json(Json& j, const InfidelityBreakdown& v) {
    j = Json{{"phase_mismatch", v.phase_mismatch}, {"displacement", v.displacement}, {"total", v.total}};
}

void from_json(const Json& j, InfidelityBreakdown& v) {
    v.phase_mismatch = j.at("phase_mismatch").get<double>();
    v.displacement = j.at("displacement").get<std::vector<double>>();
    v.total = j.at("total").get<double>();
}

void to_json(Json& j, const SearchMetadata& v) {
    j = Json{{"phase", v.phase},
             {"stage", v.stage},
             {"restart", v.restart},
             {"seed", v.seed},
             {"evaluations", v.evaluations},
             {"continuous_cost", number(v.continuous_cost)},
             {"rounding_degradation", number(v.rounding_degradation)},
             {"rounding_flagged", v.rounding_flagged},
             {"no_solution", v.no_solution},
             {"budget_exhausted", v.budget_exhausted},
             {"diagnostics", v.diagnostics}};
}

void from_json(const Json& j, SearchMetadata& v) {
    v.phase = j.at("phase").get<std::string>();
    v.stage = j.at("stage").get<int>();
    v.restart = j.at("restart").get<int>();
    v.seed = j.at("seed").get<std::uint64_t>();
    v.evaluations = j.at("evaluations").get<long>();
    v.continuous_cost = number(j.at("continuous_cost"));
    v.rounding_degradation = number(j.at("rounding_degradation"));
    v.rounding_flagged = j.at("rounding_flagged").get<bool>();
    v.no_solution = j.at("no_solution").get<bool>();
    v.budget_exhausted = j.at("budget_exhausted").get<bool>();
    v.diagnostics = j.at("diagnostics").get<std::string>();
}

void to_json(Json& j, const GateSolution& v) {
    j = Json{{"scheme", v.scheme},
             {"parameters", v.parameters},
             {"sequence", v.sequence},
             {"breakdown", v.breakdown},
             {"min_rate", number(v.min_rate)},
             {"pulse_pairs", v.sequence.total_pulse_pairs()},
             {"meta", v.meta}};
}

void from_json(const Json& j, GateSolution& v) {
    v.scheme = j.at("scheme").get<SchemeSpec>();
    v.parameters = j.at("parameters").get<std::vector<double>>();
    v.sequence = j.at("sequence").get<PulseSequence>();
    v.breakdown = j.at("breakdown").get<InfidelityBreakdown>();
    v.min_rate = number(j.at("min_rate"));
    v.meta = j.at("meta").get<SearchMetadata>();
}

void to_json(Json& j, const StageRecord& v) {
    j = Json{{"stage", v.stage},
             {"bound", v.bound},
             {"restarts", v.restarts},
             {"evaluations", v.evaluations},
             {"stage_best_cost", number(v.stage_best_cost)},
             {"stage_best_restart", v.stage_best_restart},
             {"best_cost", number(v.best_cost)},
             {"eligible", v.eligible}};
}

void from_json(const Json& j, StageRecord& v) {
    v.stage = j.at("stage").get<int>();
    v.bound = j.at("bound").get<double>();
    v.restarts = j.at("restarts").get<int>();
    v.evaluations = j.at("evaluations").get<long>();
    v.stage_best_cost = number(j.at("stage_best_cost"));
    v.stage_best_restart = j.at("stage_best_restart").get<int>();
    v.best_cost = number(j.at("best_cost"));
    v.eligible = j.at("eligible").get<int>();
}

void to_json(Json& j, const GlobalSearchConfig& v) {
    j = Json{{"scheme", v.scheme},
             {"gate_time", v.gate_time},
             {"initial_bound", v.initial_bound},
             {"expansion", v.expansion},
             {"stages", v.stages},
             {"restarts", v.restarts},
             {"seed", v.seed},
             {"gradient_tolerance", v.gradient_tolerance},
             {"relative_tolerance", v.relative_tolerance},
             {"max_iterations", v.max_iterations},
             {"rounding", rounding_name(v.rounding)},
             {"lattice_samples", v.lattice_samples},
             {"lattice_radius", v.lattice_radius},
             {"max_rate", optional(v.max_rate)},
             {"evaluation_budget", optional(v.evaluation_budget)},
             {"candidates", v.candidates},
             {"parallel", v.parallel}};
}

void from_json(const Json& j, GlobalSearchConfig& v) {
    v = GlobalSearchConfig{};
    read_if(j, "scheme", v.scheme);
    read_if(j, "gate_time", v.gate_time);
    if (j.contains("gate_time_periods")) v.gate_time = periods_to_time(j.at("gate_time_periods").get<double>());
    read_if(j, "initial_bound", v.initial_bound);
    read_if(j, "expansion", v.expansion);
    read_if(j, "stages", v.stages);
    read_if(j, "restarts", v.restarts);
    read_if(j, "seed", v.seed);
    read_if(j, "gradient_tolerance", v.gradient_tolerance);
    read_if(j, "relative_tolerance", v.relative_tolerance);
    read_if(j, "max_iterations", v.max_iterations);
    if (j.contains("rounding")) v.rounding = parse_rounding(j.at("rounding").get<std::string>());
    read_if(j, "lattice_samples", v.lattice_samples);
    read_if(j, "lattice_radius", v.lattice_radius);
    read_optional(j, "max_rate", v.max_rate);
    read_optional(j, "evaluation_budget", v.evaluation_budget);
    read_if(j, "candidates", v.candidates);
    read_if(j, "parallel", v.parallel);
}

void to_json(Json& j, const SimulationOptions& v) {
    j = Json{{"step", v.step},
             {"coulomb", coulomb_name(v.coulomb)},
             {"kick_factor", v.kick_factor},
             {"potential_offset", v.potential_offset},
             {"max_refinements", v.max_refinements},
             {"drift_tolerance", v.drift_tolerance}};
}

void from_json(const Json& j, SimulationOptions& v) {
    v = SimulationOptions{};
    read_if(j, "step", v.step);
    if (j.contains("coulomb")) v.coulomb = parse_coulomb(j.at("coulomb").get<std::string>());
    read_if(j, "kick_factor", v.kick_factor);
    read_if(j, "potential_offset", v.potential_offset);
    read_if(j, "max_refinements", v.max_refinements);
    read_if(j, "drift_tolerance", v.drift_tolerance);
}

void to_json(Json& j, const LocalSearchConfig& v) {
    j = Json{{"extension", v.extension},
             {"simplex_step", v.simplex_step},
             {"slot_tolerance", v.slot_tolerance},
             {"newton_iterations", v.newton_iterations},
             {"simplex_passes", v.simplex_passes},
             {"simplex_evaluations", v.simplex_evaluations},
             {"max_evaluations", v.max_evaluations},
             {"shift_radius", v.shift_radius},
             {"screen_radius", v.screen_radius},
             {"screen_candidates", v.screen_candidates},
             {"screen_rounds", v.screen_rounds},
             {"aggregation", aggregation_name(v.aggregation)},
             {"simulation", v.simulation},
             {"parallel", v.parallel}};
}

void from_json(const Json& j, LocalSearchConfig& v) {
    v = LocalSearchConfig{};
    read_if(j, "extension", v.extension);
    read_if(j, "simplex_step", v.simplex_step);
    read_if(j, "slot_tolerance", v.slot_tolerance);
    read_if(j, "newton_iterations", v.newton_iterations);
    read_if(j, "simplex_passes", v.simplex_passes);
    read_if(j, "simplex_evaluations", v.simplex_evaluations);
    read_if(j, "max_evaluations", v.max_evaluations);
    read_if(j, "shift_radius", v.shift_radius);
    read_if(j, "screen_radius", v.screen_radius);
    read_if(j, "screen_candidates", v.screen_candidates);
    read_if(j, "screen_rounds", v.screen_rounds);
    if (j.contains("aggregation")) v.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
    read_if(j, "simulation", v.simulation);
    read_if(j, "parallel", v.parallel);
}

void to_json(Json& j, const OdeInfidelity& v) {
    Json per = Json::array();
    for (const auto& b : v.per_basis) per.push_back(Json::array({b[0], b[1]}));
    j = Json{{"phase_mismatch", v.phase_mismatch},
             {"displacement", Json::array({v.displacement[0], v.displacement[1]})},
             {"per_basis", per},
             {"total", v.total},
             {"mean_occupation", v.mean_occupation},
             {"aggregation", aggregation_name(v.aggregation)}};
}

void from_json(const Json& j, OdeInfidelity& v) {
    v.phase_mismatch = j.at("phase_mismatch").get<double>();
    for (int i = 0; i < 2; ++i) v.displacement[i] = j.at("displacement").at(i).get<double>();
    for (int b = 0; b < 4; ++b)
        for (int i = 0; i < 2; ++i) v.per_basis[b][i] = j.at("per_basis").at(b).at(i).get<double>();
    v.total = j.at("total").get<double>();
    v.mean_occupation = j.at("mean_occupation").get<double>();
    v.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
}

void to_json(Json& j, const RefinementStep& v) {
    j = Json{{"iteration", v.iteration}, {"step", v.step}, {"evaluations", v.evaluations}, {"cost", v.cost}};
}

void from_json(const Json& j, RefinementStep& v) {
    v.iteration = j.at("iteration").get<int>();
    v.step = j.at("step").get<std::string>();
    v.evaluations = j.at("evaluations").get<long>();
    v.cost = j.at("cost").get<double>();
}

void to_json(Json& j, const BudgetTable& v) {
    Json rows = Json::array();
    for (const auto& r : v.rows) {
        Json cells = Json::array();
        for (const auto& c : r.infidelity) cells.push_back(optional(c));
        rows.push_back(Json{{"gate_time_periods", r.gate_time_periods},
                            {"ideal_infidelity", r.ideal_infidelity},
                            {"pulse_pairs", r.pulse_pairs},
                            {"infidelity", cells}});
    }
    j = Json{{"epsilons", v.epsilons}, {"cutoff", v.cutoff}, {"rows", rows}};
}

void from_json(const Json& j, BudgetTable& v) {
    v.epsilons = j.at("epsilons").get<std::vector<double>>();
    v.cutoff = j.at("cutoff").get<double>();
    v.rows.clear();
    for (const auto& r : j.at("rows")) {
        BudgetRow row;
        row.gate_time_periods = r.at("gate_time_periods").get<double>();
        row.ideal_infidelity = r.at("ideal_infidelity").get<double>();
        row.pulse_pairs = r.at("pulse_pairs").get<long>();
        for (const auto& c : r.at("infidelity"))
            row.infidelity.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
        v.rows.push_back(std::move(row));
    }
}

void to_json(Json& j, const RunManifest& v) {
    j = Json{{"trap", v.trap},
             {"global", v.global},
             {"local", v.local},
             {"refine", v.refine},
             {"refine_candidates", v.refine_candidates},
             {"repetition_rates_hz", v.repetition_rates_hz},
             {"epsilons", v.epsilons},
             {"regime_cutoff", v.regime_cutoff},
             {"output_dir", v.output_dir},
             {"seed", v.seed},
             {"export_trajectories", v.export_trajectories}};
}

void from_json(const Json& j, RunManifest& v) {
    config_guard("manifest", [&] {
        v = RunManifest{};
        read_if(j, "trap", v.trap);
        read_if(j, "global", v.global);
        read_if(j, "local", v.local);
        read_if(j, "refine", v.refine);
        read_if(j, "refine_candidates", v.refine_candidates);
        read_if(j, "repetition_rates_hz", v.repetition_rates_hz);
        read_if(j, "epsilons", v.epsilons);
        read_if(j, "regime_cutoff", v.regime_cutoff);
        read_if(j, "output_dir", v.output_dir);
        read_if(j, "seed", v.seed);
        read_if(j, "export_trajectories", v.export_trajectories);
        return 0;
    });
}

void to_json(Json& j, const RateResult& v) {
    j = Json{{"repetition_rate_hz", v.repetition_rate_hz},
             {"rate", v.rate},
             {"snapped", optional(v.snapped)},
             {"local", optional(v.local)},
             {"local_ode", optional(v.local_ode)},
             {"local_input", optional(v.local_input)},
             {"log", v.log},
             {"local_evaluations", v.local_evaluations},
             {"local_candidate", v.local_candidate},
             {"note", v.note}};
}

void from_json(const Json& j, RateResult& v) {
    v.repetition_rate_hz = j.at("repetition_rate_hz").get<double>();
    v.rate = j.at("rate").get<double>();
    read_optional(j, "snapped", v.snapped);
    read_optional(j, "local", v.local);
    read_optional(j, "local_ode", v.local_ode);
    read_optional(j, "local_input", v.local_input);
    v.log = j.at("log").get<std::vector<RefinementStep>>();
    v.local_evaluations = j.at("local_evaluations").get<long>();
    v.local_candidate = j.at("local_candidate").get<int>();
    v.note = j.at("note").get<std::string>();
}

void to_json(Json& j, const ResultRecord& v) {
    j = Json{{"manifest", v.manifest},
             {"modes", v.modes},
             {"global", optional(v.global)},
             {"candidates", v.candidates},
             {"stages", v.stages},
             {"linear_ode", optional(v.linear_ode)},
             {"full_ode", optional(v.full_ode)},
             {"rates", v.rates},
             {"budget", optional(v.budget)},
             {"notes", v.notes},
             {"failed_stage", v.failed_stage},
             {"failure", v.failure}};
}

void from_json(const Json& j, ResultRecord& v) {
    v.manifest = j.at("manifest").get<RunManifest>();
    v.modes = j.at("modes").get<ModeStructure>();
    read_optional(j, "global", v.global);
    v.candidates = j.at("candidates").get<std::vector<GateSolution>>();
    v.stages = j.at("stages").get<std::vector<StageRecord>>();
    read_optional(j, "linear_ode", v.linear_ode);
    read_optional(j, "full_ode", v.full_ode);
    v.rates = j.at("rates").get<std::vector<RateResult>>();
    read_optional(j, "budget", v.budget);
    v.notes = j.at("notes").get<std::vector<std::string>>();
    v.failed_stage = j.at("failed_stage").get<std::string>();
    v.failure = j.at("failure").get<std::string>();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
    const Json j = read_json(path);
    RunManifest m = j.get<RunManifest>();
    m.validate();
    return m;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    write_text(path, dump(Json(manifest)));
}

GateSolution read_solution(const std::filesystem::path& path) {
    const Json j = read_json(path);
    try {
        return j.get<GateSolution>();
    } catch (const Json::exception& e) {
        throw IoError("malformed solution in " + path.string() + ": " + e.what());
    }
}

void write_solution(const std::filesystem::path& path, const GateSolution& solution) {
    write_text(path, dump(Json(solution)));
}

void verify_record(const ResultRecord& r, double tol) {
    const TrapConfiguration& trap = r.manifest.trap;
    auto check = [&](double stored, double fresh, const std::string& what) {
        if (!close(stored, fresh, tol)) {
            std::ostringstream os;
            os.precision(17);
            os << "stored " << what << " " << stored << " does not match re-evaluation " << fresh;
            throw IoError(os.str());
        }
    };
    const CostModel model = cost_model(trap, r.modes);
    auto check_solution = [&](const GateSolution& s, const std::string& what) {
        check(s.breakdown.total, truncated_infidelity(s.sequence, model).total, what + " truncated cost");
    };
    if (r.global) check_solution(*r.global, "global");
    for (std::size_t i = 0; i < r.candidates.size(); ++i)
        check_solution(r.candidates[i], "candidate " + std::to_string(i));
    const LocalSearchConfig& lc = r.manifest.local;
    if (r.global && (r.linear_ode || r.full_ode)) {
        SimulationOptions opt = lc.simulation;
        for (auto [stored, model_kind] : {std::pair{&r.linear_ode, CoulombModel::Linearized},
                                          std::pair{&r.full_ode, CoulombModel::Full}}) {
            if (!*stored) continue;
            opt.coulomb = model_kind;
            const auto set = simulate_sequence(r.global->sequence, trap, opt);
            check((*stored)->total, ode_infidelity(set, trap.mean_occupation, lc.aggregation).total,
                  std::string(coulomb_name(model_kind)) + " ODE cost");
        }
    }
    for (const auto& rate : r.rates) {
        LocalSearchConfig cfg = lc;
        cfg.rate = rate.rate;
        if (rate.snapped && r.global)
            check(rate.snapped->total, snapped_cost(r.global->sequence, trap, cfg).total, "snapped ODE cost");
        if (rate.local && rate.local_ode) {
            check_solution(*rate.local, "local");
            check(rate.local_ode->total, snapped_cost(rate.local->sequence, trap, cfg).total, "local ODE cost");
        }
    }
}

ResultRecord read_record(const std::filesystem::path& path, bool verify) {
    const Json j = read_json(path);
    ResultRecord r;
    try {
        r = j.get<ResultRecord>();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError("malformed record in " + path.string() + ": " + e.what());
    }
    if (verify) verify_record(r);
    return r;
}

void write_record(const std::filesystem::path& path, const ResultRecord& record) {
    write_text(path, dump(Json(record)));
}

std::string search_log(const ResultRecord& r) {
    std::string out;
    for (const auto& s : r.stages) {
        Json j = s;
        j["phase"] = "global";
        out += j.dump() + "\n";
    }
    for (const auto& rate : r.rates) {
        for (const auto& step : rate.log) {
            Json j = step;
            j["phase"] = "local";
            j["repetition_rate_hz"] = rate.repetition_rate_hz;
            out += j.dump() + "\n";
        }
    }
    return out;
}

std::vector<std::string> trajectory_columns(const ModeStructure& modes) {
    std::vector<std::string> c{"t", "x1", "x2", "v1", "v2", "phase"};
    for (int p = 0; p < modes.mode_count(); ++p) {
        c.push_back("mode" + std::to_string(p) + "_re");
        c.push_back("mode" + std::to_string(p) + "_im");
    }
    return c;
}

std::vector<std::vector<double>> trajectory_table(const TrajectorySet& set, const ModeStructure& modes,
                                                  BasisState basis) {
    if (modes.ion_count() != 2) throw IoError("trajectory export needs two-ion mode data");
    const Trajectory& tr = set.basis[static_cast<int>(basis)];
    const Trajectory& ref = set.reference;
    std::vector<TrajectoryState> states = tr.history;
    if (states.empty()) states.push_back(tr.final);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const TrajectoryState& s = states[k];
        // The kick-free reference sits at rest, so its final state serves at every time.
        const TrajectoryState& r0 = ref.history.empty() ? ref.final : ref.history[std::min(k, ref.history.size() - 1)];
        std::vector<double> row{s.t, s.x[0], s.x[1], s.v[0], s.v[1], s.phase};
        const double dx[2] = {s.x[0] - r0.x[0], s.x[1] - r0.x[1]};
        const double dv[2] = {s.v[0] - r0.v[0], s.v[1] - r0.v[1]};
        for (int p = 0; p < modes.mode_count(); ++p) {
            const double w = modes.ratio(p);
            const double q = modes.coupling(p, 0) * dx[0] + modes.coupling(p, 1) * dx[1];
            const double u = modes.coupling(p, 0) * dv[0] + modes.coupling(p, 1) * dv[1];
            const std::complex<double> a = std::complex<double>(std::sqrt(w / 2.0) * q, u / std::sqrt(2.0 * w)) *
                                           std::polar(1.0, w * s.t);
            row.push_back(a.real());
            row.push_back(a.imag());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void export_trajectories(const TrajectorySet& set, const ModeStructure& modes,
                         const std::filesystem::path& directory) {
    static const char* names[4] = {"basis_00.csv", "basis_01.csv", "basis_10.csv", "basis_11.csv"};
    const auto cols = trajectory_columns(modes);
    for (int b = 0; b < 4; ++b) {
        std::ostringstream os;
        for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
        os << '\n';
        os.precision(17);
        for (const auto& row : trajectory_table(set, modes, static_cast<BasisState>(b))) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
            os << '\n';
        }
        write_text(directory / names[b], os.str());
    }
}

}  // namespace fastgate
