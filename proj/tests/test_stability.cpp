#include "common.hpp"

#include "kdvks/io.hpp"
#include "kdvks/stability.hpp"

#include <doctest.h>

using namespace kdvks;

#ifndef KDVKS_TEST_DATA
#define KDVKS_TEST_DATA "."
#endif

TEST_CASE("reference wave is diffusively stable") {
    const auto v = certify_stability(testing::reference_wave(), 64, 64);
    CHECK(v.d1_ok);
    CHECK(v.d2_ok);
    CHECK(v.d3_ok);
    CHECK(v.verdict() == Verdict::stable);
    CHECK(v.theta > 0.0);
    CHECK(v.zero_count == 2);
    CHECK(v.kernel_gap_ratio > 1e6);
}

TEST_CASE("short waves are unstable") {
    const auto w = compute_wave(WaveParameters::from_epsilon(0.0), 6.5, 128);
    CHECK(certify_stability(w, 64, 64).verdict() == Verdict::unstable);
}

TEST_CASE("eps = 0 stable band matches the golden endpoints") {
    const auto golden = io::read_json(std::string(KDVKS_TEST_DATA) + "/golden/stability_band_eps0.json");
    const double lo = golden.at("lower").get<double>(), hi = golden.at("upper").get<double>();
    StabilityMapOptions opts;
    opts.rel_tol = 1e-3;
    const auto map = stability_map({0.0}, golden.at("period_grid").get<std::vector<double>>(), opts);
    std::vector<double> up, down;
    for (const auto& b : map.boundaries) {
        if (b.above == Verdict::stable) up.push_back(b.period);
        if (b.below == Verdict::stable) down.push_back(b.period);
    }
    REQUIRE(up.size() == 1);
    REQUIRE(down.size() == 1);
    CHECK(up[0] == doctest::Approx(lo).epsilon(1e-2));
    CHECK(down[0] == doctest::Approx(hi).epsilon(1e-2));
    int stable_runs = 0;
    Verdict prev = Verdict::unknown;
    for (const auto& c : map.cells) {
        if (c.verdict == Verdict::stable && prev != Verdict::stable) ++stable_runs;
        prev = c.verdict;
    }
    CHECK(stable_runs == 1);
}

TEST_CASE("verdict strings") {
    CHECK(to_string(Verdict::stable) == "stable");
    CHECK(to_string(Verdict::unstable) == "unstable");
}
