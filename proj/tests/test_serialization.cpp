#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fastgate/error.hpp"
#include "fastgate/pipeline.hpp"
#include "fastgate/serialization.hpp"
#include "fastgate/units.hpp"

using namespace fastgate;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fastgate_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunManifest small_manifest() {
    RunManifest m;
    m.trap.architecture = Architecture::MicrotrapArray;
    m.trap.chi = 1.8e-4;
    m.global.scheme = parse_scheme("gpg:4");
    m.global.gate_time = periods_to_time(1.0);
    m.global.stages = 2;
    m.global.restarts = 4;
    m.global.lattice_samples = 100;
    m.global.candidates = 2;
    m.local.newton_iterations = 2;
    m.local.simplex_evaluations = 10;
    m.local.screen_rounds = 1;
    m.local.screen_candidates = 2;
    m.local.max_evaluations = 60;
    m.repetition_rates_hz = {1e9};
    m.epsilons = {1e-6};
    m.seed = 5;
    return m;
}

}  // namespace

TEST_CASE("solution round trip") {
    TrapConfiguration trap;
    const auto s = make_solution(parse_scheme("apg:4"), {3, -1}, 2.0, cost_model(trap, normal_modes(trap)));
    const std::string text = dump(Json(s));
    const GateSolution back = Json::parse(text).get<GateSolution>();
    CHECK(back.sequence == s.sequence);
    CHECK(back.breakdown.total == s.breakdown.total);
    CHECK(dump(Json(back)) == text);
}

TEST_CASE("non-finite rates are stored as null") {
    GateSolution s;
    s.min_rate = std::numeric_limits<double>::infinity();
    const Json j = s;
    CHECK(j.at("min_rate").is_null());
    CHECK(std::isinf(j.get<GateSolution>().min_rate));
}

TEST_CASE("manifest accepts gate time in periods") {
    const Json j = Json::parse(R"({"global": {"scheme": "gpg:8", "gate_time_periods": 1.75},
                                   "trap": {"architecture": "microtrap", "chi": 0.00018}})");
    const auto m = j.get<RunManifest>();
    CHECK(m.global.gate_time == doctest::Approx(periods_to_time(1.75)));
    CHECK(m.trap.architecture == Architecture::MicrotrapArray);
    CHECK_THROWS_AS(Json::parse(R"({"trap": {"architecture": "penning"}})").get<RunManifest>(), ConfigError);
}

TEST_CASE("malformed files raise I/O errors") {
    const auto dir = scratch("malformed");
    write_text(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(read_json(dir / "bad.json"), IoError);
    CHECK_THROWS_AS(read_json(dir / "missing.json"), IoError);
    write_text(dir / "partial.json", "{\"scheme\": \"gpg:2\"}");
    CHECK_THROWS_AS(read_solution(dir / "partial.json"), IoError);
}

TEST_CASE("records round-trip byte-identically and verify on load") {
    const auto dir = scratch("record");
    auto m = small_manifest();
    m.output_dir = dir.string();
    const auto out = run_pipeline(m);
    const std::string first = slurp(dir / "record.json");
    const ResultRecord back = read_record(dir / "record.json", true);
    write_record(dir / "again.json", back);
    CHECK(slurp(dir / "again.json") == first);
    CHECK(fs::exists(dir / "search_log.jsonl"));
    CHECK(fs::exists(dir / "budget.csv"));
    CHECK(fs::exists(dir / "timing.json"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(read_manifest(dir / "manifest.json").seed == m.seed);

    // Tampering with a stored infidelity is caught by re-evaluation.
    Json j = read_json(dir / "record.json");
    j["global"]["breakdown"]["total"] = j["global"]["breakdown"]["total"].get<double>() * (1 + 1e-6);
    write_text(dir / "tampered.json", dump(j));
    CHECK_THROWS_AS(read_record(dir / "tampered.json", true), IoError);
    CHECK_NOTHROW(read_record(dir / "tampered.json", false));
}

TEST_CASE("trajectory export") {
    TrapConfiguration trap;
    const auto modes = normal_modes(trap);
    SimulationOptions opt;
    opt.record = true;
    opt.coulomb = CoulombModel::Linearized;

    SUBCASE("empty train gives constant columns") {
        opt.end = 1.0;
        const auto set = simulate_gate(std::vector<Impulse>{}, trap, opt);
        const auto rows = trajectory_table(set, modes, BasisState::S01);
        REQUIRE(rows.size() > 2);
        CHECK(rows.front().size() == 6 + 2 * 2);
        for (const auto& r : rows)
            for (std::size_t c = 1; c < r.size(); ++c) CHECK(r[c] == rows.front()[c]);
    }

    SUBCASE("rotating-frame closure") {
        PulseSequence seq;
        seq.groups = {{3, 0.1}, {-2, 0.9}, {4, 1.7}};
        seq.gate_time = 2.5;
        const auto set = simulate_sequence(seq, trap, opt);
        // In |00> only the common mode (omega = omega_t) moves, so its radius is the ion displacement.
        const auto rows = trajectory_table(set, modes, BasisState::S00);
        const auto& last = rows.back();
        const int common = modes.coupling(0, 0) * modes.coupling(0, 1) > 0 ? 0 : 1;
        const double radius = std::hypot(last[6 + 2 * common], last[7 + 2 * common]);
        const auto inf = ode_infidelity(set, trap.mean_occupation);
        const double dp0 = inf.per_basis[0][0], dp1 = inf.per_basis[0][1];
        CHECK(radius == doctest::Approx(std::sqrt(dp0 * dp0 + dp1 * dp1)).epsilon(1e-9));
        CHECK(std::hypot(last[8 - 2 * common], last[9 - 2 * common]) < 1e-9);

        const auto dir = scratch("traj");
        export_trajectories(set, modes, dir);
        for (const char* f : {"basis_00.csv", "basis_01.csv", "basis_10.csv", "basis_11.csv"}) {
            const auto text = slurp(dir / f);
            CHECK(text.rfind("t,x1,x2,v1,v2,phase,mode0_re,mode0_im,mode1_re,mode1_im\n", 0) == 0);
        }
    }
}
