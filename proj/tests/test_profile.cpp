#include "common.hpp"

#include <doctest.h>

using namespace kdvks;

namespace {

// -c u + eps u'' + delta (u' + u''') + u^2/2 - q on the profile grid.
double integrated_residual_direct(const WaveProfile& w) {
    const auto& u = w.profile;
    const auto d1 = differentiate(u, 1), d2 = differentiate(u, 2), d3 = differentiate(u, 3);
    double mx = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        const double r = -w.speed * u[i] + w.params.epsilon * d2[i] + w.params.delta * (d1[i] + d3[i]) +
                         0.5 * u[i] * u[i] - w.quad_const;
        mx = std::max(mx, std::abs(r));
    }
    return mx;
}

}  // namespace

TEST_CASE("reference wave solves the profile equation") {
    const auto& w = testing::reference_wave();
    CHECK(integrated_residual_direct(w) < 1e-9);
    CHECK(std::abs(mean(w.profile)) < 1e-13);
    CHECK(w.amplitude() > 0.5);
    // eps = 0 has the reflection symmetry x -> -x, u -> -u, so the wave is stationary.
    CHECK(std::abs(w.speed) < 1e-10);
}

TEST_CASE("nonzero eps waves travel and still solve the equation") {
    const auto w = compute_wave(WaveParameters::from_epsilon(0.3), 7.0, 128);
    CHECK(integrated_residual_direct(w) < 1e-9);
    CHECK(std::abs(w.speed) > 1e-3);
    CHECK(w.params.delta == doctest::Approx(std::sqrt(1.0 - 0.09)));
}

TEST_CASE("amplitude near onset follows the Stuart-Landau prediction") {
    // k = 2 pi / T slightly below 1: the fundamental is weakly unstable.
    for (double k : {0.9, 0.97})
    for (double eps : {0.0, 0.4}) {
        const auto p = WaveParameters::from_epsilon(eps);
        const double period = kTwoPi / k;
        const auto pred = weakly_nonlinear_prediction(p, period);
        REQUIRE(pred.has_value());
        const auto w = compute_wave(p, period, 64);
        const auto c = to_spectral(w.profile);
        const double a1 = 2.0 * std::abs(c.at(1));
        // relative corrections are O(onset distance)
        CHECK(a1 == doctest::Approx(pred->cos_amplitude).epsilon(0.1));
        CHECK(w.speed == doctest::Approx(pred->speed).epsilon(0.1).scale(1e-3));
    }
}

TEST_CASE("Galilean boost shifts speed and mean together") {
    const auto& w = testing::reference_wave();
    const auto b = galilean_boost(w, 0.3);
    CHECK(b.speed == doctest::Approx(w.speed + 0.3));
    CHECK(mean(b.profile) == doctest::Approx(0.3));
    CHECK_FALSE(b.mean_zero);
    CHECK(integrated_residual_direct(b) < 1e-9);
}

TEST_CASE("rescaled solutions solve the raw equation") {
    // u(x, t) = m U((x - c_raw t) / a) must satisfy
    // u_t + E u_xxx + D u_xx + G u_xxxx + Lambda u u_x = 0.
    const double e_raw = 0.7, d_raw = 2.0, g_raw = 0.5, l_raw = 3.0;
    const auto [p, s] = normalize_parameters(e_raw, d_raw, g_raw, l_raw);
    CHECK(p.epsilon * p.epsilon + p.delta * p.delta == doctest::Approx(1.0));
    const auto w = compute_wave(p, 7.5, 128);
    const double a = s.x, len = std::abs(a) * w.period;
    const double c_raw = w.speed * a / s.t;
    // sample u(x) = m U(x / a) on a grid of the raw length
    RealField u(PeriodicGrid(len, 128));
    const auto vals = interpolate(w.profile, [&] {
        std::vector<double> y;
        for (int i = 0; i < 128; ++i) y.push_back(u.grid.x(i) / a);
        return y;
    }());
    for (int i = 0; i < 128; ++i) u[i] = s.u * vals[static_cast<size_t>(i)];
    const auto u1 = differentiate(u, 1), u2 = differentiate(u, 2), u3 = differentiate(u, 3), u4 = differentiate(u, 4);
    double res = 0.0, scale = 0.0;
    for (int i = 0; i < 128; ++i) {
        const double terms[] = {-c_raw * u1[i], e_raw * u3[i], d_raw * u2[i], g_raw * u4[i], l_raw * u[i] * u1[i]};
        double r = 0.0;
        for (double x : terms) {
            r += x;
            scale = std::max(scale, std::abs(x));
        }
        res = std::max(res, std::abs(r));
    }
    CHECK(res < 1e-8 * scale);
}

TEST_CASE("continuation in the period keeps every step converged") {
    const auto seed = compute_wave(WaveParameters::from_epsilon(0.0), 7.6, 64);
    const auto br = continue_in_period(seed, 8.2, 0.2);
    CHECK_FALSE(br.aborted);
    CHECK(br.profiles.back().period == doctest::Approx(8.2));
    for (const auto& w : br.profiles) CHECK(integrated_residual_direct(w) < 1e-9);
}

TEST_CASE("centering puts the maximum at x = 0 without changing the wave") {
    const auto& w = testing::reference_wave();
    const auto c = center_profile(w);
    CHECK(c.profile[0] == doctest::Approx(norm_linf(c.profile)).epsilon(1e-6));
    CHECK(norm_l2(c.profile) == doctest::Approx(norm_l2(w.profile)));
    CHECK(integrated_residual_direct(c) < 1e-9);
}

TEST_CASE("bad inputs are rejected") {
    CHECK_THROWS_AS(normalize_parameters(0.1, -1.0, 1.0, 1.0), std::invalid_argument);
}
