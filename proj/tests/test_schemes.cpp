#include <cmath>
#include <random>

#include "doctest.h"
#include "fastgate/error.hpp"
#include "fastgate/schemes.hpp"
#include "oracles.hpp"

using namespace fastgate;

namespace {

PulseSequence sequence(std::vector<long> z, std::vector<double> t) {
    PulseSequence s;
    for (std::size_t k = 0; k < z.size(); ++k) s.groups.push_back({z[k], t[k]});
    s.gate_time = t.empty() ? 1.0 : t.back() - t.front();
    return s;
}

}  // namespace

TEST_CASE("scheme parsing") {
    CHECK(parse_scheme("gpg:8").kind == SchemeKind::GPG);
    CHECK(parse_scheme("gpg:8").groups == 8);
    CHECK(parse_scheme("apg:16").kind == SchemeKind::APG);
    CHECK(parse_scheme("frag").groups == 6);
    CHECK(parse_scheme("gzc").kind == SchemeKind::GZC);
    CHECK(parse_scheme("apg:6").to_string() == "apg:6");
    CHECK_THROWS(parse_scheme("apg:5"));
    CHECK_THROWS(parse_scheme("gpg:0"));
    CHECK_THROWS(parse_scheme("xyz"));
}

TEST_CASE("GPG construction") {
    SchemeParams p{parse_scheme("gpg:2"), {1, 2}, 3.0};
    const auto s = build_sequence(p);
    REQUIRE(s.groups.size() == 2);
    CHECK(s.groups[0] == PulseGroup{1, 1.5});
    CHECK(s.groups[1] == PulseGroup{2, 3.0});
}

TEST_CASE("APG construction mirrors the half vector") {
    SchemeParams p{parse_scheme("apg:4"), {3, -1}, 4.0};
    const auto s = build_sequence(p);
    REQUIRE(s.groups.size() == 4);
    const std::vector<long> z{1, -3, 3, -1};
    const std::vector<double> t{-2, -1, 1, 2};
    for (int k = 0; k < 4; ++k) {
        CHECK(s.groups[k].z == z[k]);
        CHECK(s.groups[k].time == doctest::Approx(t[k]));
    }
    CHECK(is_antisymmetric(s));
}

TEST_CASE("FRAG ratios") {
    SchemeParams p{parse_scheme("frag"), {2, 0.5, 1.0, 1.5}, 3.0};
    const auto c = expand_parameters(p);
    const std::vector<double> z{-2, 4, -4, 4, -4, 2};
    REQUIRE(c.z.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK(c.z[k] == doctest::Approx(z[k]));
}

TEST_CASE("minimum repetition rate") {
    CHECK(min_repetition_rate(sequence({1, 1}, {0.0, 0.5})) == doctest::Approx(2.0));
    CHECK(min_repetition_rate(sequence({2, 2}, {0.0, 0.5})) == doctest::Approx(4.0));
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long> zd(-9, 9);
    std::uniform_real_distribution<double> td(0, 5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> z, t;
        while (z.size() < 6) {
            const long v = zd(rng);
            if (v == 0) continue;
            z.push_back(static_cast<double>(v));
            t.push_back(td(rng));
        }
        CHECK(min_repetition_rate(z, t) == doctest::Approx(oracle::min_rate(z, t)).epsilon(1e-9));
    }
}

TEST_CASE("kick-train expansion") {
    auto s = sequence({3}, {0.0});
    auto k = expand_to_kick_train(s, 10.0);
    REQUIRE(k.size() == 3);
    CHECK(k.time(0) == doctest::Approx(-0.1));
    CHECK(k.time(1) == doctest::Approx(0.0));
    CHECK(k.time(2) == doctest::Approx(0.1));
    for (int sgn : k.signs) CHECK(sgn == 1);

    s = sequence({-1}, {0.234});
    k = expand_to_kick_train(s, 10.0);
    REQUIRE(k.size() == 1);
    CHECK(k.time(0) == doctest::Approx(0.2));
    CHECK(k.signs[0] == -1);
}

TEST_CASE("kick train conserves net momentum") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<long> zd(-12, 12);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<long> z;
        std::vector<double> t;
        for (int g = 0; g < 6; ++g) {
            long v = zd(rng);
            if (v == 0) v = 1;
            z.push_back(v);
            t.push_back(g * 1.0);
        }
        const auto s = sequence(z, t);
        const auto k = expand_to_kick_train(s, 50.0);
        long net = 0, total = 0;
        for (int sgn : k.signs) net += sgn;
        for (long v : z) total += v;
        CHECK(net == total);
        CHECK(static_cast<long>(k.size()) == s.total_pulse_pairs());
    }
}

TEST_CASE("colliding groups are rejected") {
    const auto s = sequence({5, 5}, {0.0, 0.1});
    CHECK_THROWS_AS(expand_to_kick_train(s, 10.0), CollisionError);
    CHECK_NOTHROW(expand_to_kick_train(s, 100.0));
}
