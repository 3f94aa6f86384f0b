#include <filesystem>
#include <set>

#include "doctest.h"
#include "fastgate/error.hpp"
#include "fastgate/pipeline.hpp"
#include "fastgate/serialization.hpp"
#include "fastgate/units.hpp"

using namespace fastgate;
namespace fs = std::filesystem;

namespace {

RunManifest manifest() {
    RunManifest m;
    m.trap.architecture = Architecture::MicrotrapArray;
    m.trap.chi = 1.8e-4;
    m.global.scheme = parse_scheme("gpg:4");
    m.global.gate_time = periods_to_time(1.0);
    m.global.stages = 2;
    m.global.restarts = 4;
    m.global.lattice_samples = 100;
    m.global.candidates = 3;
    m.refine_candidates = 2;
    m.local.newton_iterations = 2;
    m.local.simplex_evaluations = 10;
    m.local.screen_rounds = 1;
    m.local.screen_candidates = 2;
    m.local.max_evaluations = 60;
    m.repetition_rates_hz = {1e9};
    m.epsilons = {1e-6, 1e-5};
    m.seed = 9;
    return m;
}

Json without_timing(const ResultRecord& r) { return Json(r); }

}  // namespace

TEST_CASE("pipeline runs every stage") {
    const auto o = run_pipeline(manifest());
    const auto& r = o.record;
    CHECK(r.complete());
    REQUIRE(r.global);
    CHECK(r.linear_ode);
    CHECK(r.full_ode);
    REQUIRE(r.rates.size() == 1);
    CHECK(r.rates[0].local);
    CHECK(r.rates[0].local_ode->total <= r.rates[0].local_input->total);
    CHECK(r.rates[0].local_candidate >= 0);
    CHECK(r.rates[0].local_candidate < 2);
    REQUIRE(r.budget);
    CHECK(r.budget->rows.size() == 2);
    std::vector<std::string> names;
    for (const auto& t : o.timing) names.push_back(t.stage);
    CHECK(names.front() == "config");
}

TEST_CASE("identical manifests give identical records") {
    const auto a = run_pipeline(manifest());
    const auto b = run_pipeline(manifest());
    CHECK(without_timing(a.record) == without_timing(b.record));
}

TEST_CASE("empty epsilon list skips the error model") {
    auto m = manifest();
    m.epsilons.clear();
    m.repetition_rates_hz.clear();
    const auto o = run_pipeline(m);
    CHECK_FALSE(o.record.budget);
    bool noted = false;
    for (const auto& n : o.record.notes) noted |= n.find("error budget skipped") != std::string::npos;
    CHECK(noted);
}

TEST_CASE("failures keep partial artifacts and name the stage") {
    const fs::path dir = fs::temp_directory_path() / "fastgate_test_failure";
    fs::remove_all(dir);
    auto m = manifest();
    m.output_dir = dir.string();
    m.repetition_rates_hz = {1e6};  // far below f_min: no grid embedding
    try {
        run_pipeline(m);
        FAIL("expected a local-opt failure");
    } catch (const Error& e) {
        CHECK(e.stage() == Stage::LocalOpt);
        CHECK(exit_code(e.stage()) == 7);
    }
    const auto rec = read_record(dir / "record.json", true);
    CHECK(rec.failed_stage == "local-opt");
    CHECK(rec.global);
    CHECK(rec.full_ode);
}

TEST_CASE("invalid manifests fail in the config stage") {
    auto m = manifest();
    m.global.gate_time = -1;
    try {
        run_pipeline(m);
        FAIL("expected a config failure");
    } catch (const Error& e) {
        CHECK(e.stage() == Stage::Config);
        CHECK(exit_code(e.stage()) == 2);
    }
    m = manifest();
    m.epsilons = {2.0};
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("exit codes are distinct") {
    std::set<int> codes;
    for (auto s : {Stage::Config, Stage::TrapModel, Stage::Schemes, Stage::GlobalOpt, Stage::OdeDynamics,
                   Stage::LocalOpt, Stage::ErrorModel, Stage::Io})
        codes.insert(exit_code(s));
    CHECK(codes.size() == 8);
    CHECK(codes.count(0) == 0);
}

TEST_CASE("multi-ion runs skip the two-ion stages") {
    auto m = manifest();
    m.trap = TrapConfiguration{};
    m.trap.ion_count = 3;
    const auto o = run_pipeline(m);
    CHECK(o.record.global);
    CHECK_FALSE(o.record.full_ode);
    CHECK(o.record.rates.empty());
}
