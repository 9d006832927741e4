#include "common.hpp"

#include "kdvks/semigroup.hpp"
#include "kdvks/simulator.hpp"

#include <doctest.h>

using namespace kdvks;

namespace {

RealField sine(const PeriodicGrid& g, double a) {
    return RealField::sample(g, [&](double x) { return a * std::sin(kTwoPi * x / g.length()); });
}

}  // namespace

TEST_CASE("the wave is a fixed point of the co-moving simulation") {
    const auto& w = testing::reference_wave();
    auto cfg = SimConfig::for_wave(w, 1, 128, 0.01, 20.0);
    Simulator sim(cfg, w.profile);
    const auto tr = sim.run(w.profile);
    CHECK(norm_l2(tr.snapshots.back() - w.profile) < 1e-9);
    CHECK(tr.distance_to_family.back() < 1e-9);
}

TEST_CASE("fourth-order convergence in dt") {
    const auto& w = testing::reference_wave();
    const auto ub = tile(w.profile, 2);
    const auto u0 = ub + sine(ub.grid, 0.1);
    std::vector<RealField> ends;
    for (double dt : {0.02, 0.01, 0.005}) {
        Simulator sim(SimConfig::for_wave(w, 2, 128, dt, 4.0), u0);
        ends.push_back(sim.run().snapshots.back());
    }
    const double e1 = norm_l2(ends[0] - ends[1]), e2 = norm_l2(ends[1] - ends[2]);
    CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("mass is conserved and the Galilean symmetry holds") {
    const auto& w = testing::reference_wave();
    const auto ub = tile(w.profile, 2);
    const auto u0 = ub + sine(ub.grid, 0.1) + 0.05 * RealField::sample(ub.grid, [](double) { return 1.0; });
    auto cfg = SimConfig::for_wave(w, 2, 128, 0.01, 10.0);
    cfg.snapshot_times = {0.0, 2.0, 5.0, 10.0};
    Simulator sim(cfg, u0);
    const auto tr = sim.run();
    CHECK(check_mass(tr).max_drift < 1e-13);
    // The boost moves c u_x into the explicitly treated nonlinearity, so the
    // two runs differ by the O(dt^4) splitting error only.
    const auto g = check_galilean(cfg, u0, 0.1);
    auto fine = cfg;
    fine.dt /= 2;
    const auto g2 = check_galilean(fine, u0, 0.1);
    CHECK(g.max_residual < 1e-6);
    CHECK(g.max_residual / g2.max_residual == doctest::Approx(16.0).epsilon(0.25));
    CHECK(g.mass_offset_error < 1e-12);
}

TEST_CASE("small perturbations follow the linear semigroup") {
    const auto& w = testing::reference_wave();
    const auto ctx = prepare_semigroup(w, 2, 64);
    const auto ub = tile(w.profile, 2);
    const auto pert = sine(ub.grid, 1.0);
    const auto lin = apply_semigroup(ctx, 3.0, resample(pert, ctx.grid().size()));
    double prev = 1.0;
    for (double a : {1e-2, 1e-3}) {
        Simulator sim(SimConfig::for_wave(w, 2, 128, 0.005, 3.0), ub + a * pert);
        const auto d = (1.0 / a) * (sim.run().snapshots.back() - ub);
        const double err = norm_l2(resample(d, ctx.grid().size()) - lin) / norm_l2(lin);
        CHECK(err < 2.0 * a);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("long runs stay on the wave family") {
    // Regression: roundoff in the imaginary field used to grow at the
    // unstable rate of the constant state and blow up near t = 300.
    const auto& w = testing::reference_wave();
    const auto u0 = w.profile + sine(w.profile.grid, 1e-2);
    auto cfg = SimConfig::for_wave(w, 1, 64, 0.02, 400.0);
    cfg.snapshot_times = {0.0, 100.0, 400.0};
    Simulator sim(cfg, resample(u0, 64));
    const auto tr = sim.run(resample(w.profile, 64));
    CHECK(tr.distance_to_family.back() < 1e-10);
}

TEST_CASE("best_translation recovers a known shift") {
    const auto& w = testing::reference_wave();
    for (double s : {0.0, 0.37, 3.9, 7.5}) {
        const auto f = translate(w.profile, s);
        const double got = best_translation(f, w.profile);
        const double diff = std::remainder(got - s, w.period);
        CHECK(std::abs(diff) < 1e-10);
    }
}

TEST_CASE("configuration checks") {
    const auto& w = testing::reference_wave();
    CHECK_THROWS_AS(Simulator(SimConfig::for_wave(w, 1, 128, 0.2, 1.0), w.profile), std::invalid_argument);
    auto cfg = SimConfig::for_wave(w, 1, 128, 0.01, 1.0);
    cfg.snapshot_times = {0.5, 0.25};
    CHECK_THROWS_AS(Simulator(cfg, w.profile), std::invalid_argument);
    cfg.snapshot_times = {0.005};
    CHECK_THROWS_AS(Simulator(cfg, w.profile), std::invalid_argument);
    cfg = SimConfig::for_wave(w, 1, 128, 0.01, 1.005);
    CHECK_THROWS_AS(Simulator(cfg, w.profile), std::invalid_argument);
}
