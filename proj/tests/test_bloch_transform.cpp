#include "common.hpp"

#include "kdvks/bloch_transform.hpp"

#include <doctest.h>

using namespace kdvks;

TEST_CASE("lattice frequencies satisfy exp(i xi N T) = 1 and lie in [-pi/T, pi/T)") {
    for (int n : {1, 2, 3, 4, 7, 8}) {
        const double t = 6.3;
        const SubharmonicLattice lat(n, t);
        const auto xs = lat.frequencies();
        REQUIRE(static_cast<int>(xs.size()) == n);
        for (double xi : xs) {
            CHECK(std::abs(std::exp(cplx(0.0, xi * n * t)) - 1.0) < 1e-12);
            CHECK(xi >= -kPi / t - 1e-14);
            CHECK(xi < kPi / t);
        }
    }
}

TEST_CASE("Bloch samples match the direct Fourier definition") {
    // B(g)(xi, x) = sum_l ghat(xi + 2 pi l / T) e^{2 pi i l x / T} with the
    // unnormalized transform on (0, NT); evaluated by direct quadrature.
    std::mt19937_64 rng(5);
    const int n = 3, p = 16;
    const double t = 2.0;
    const PeriodicGrid g(n * t, n * p);
    const auto f = testing::random_smooth(g, rng, 5);
    const SubharmonicLattice lat(n, t);
    const auto d = bloch_transform(f, lat);
    for (const auto& s : d.samples) {
        for (int xi_pt = 0; xi_pt < p; ++xi_pt) {
            const double x = d.cell_grid.x(xi_pt);
            cplx want = 0.0;
            for (int l = -p; l <= p; ++l) {
                const double z = s.xi + kTwoPi * l / t;
                cplx ghat = 0.0;
                for (int j = 0; j < g.size(); ++j) ghat += std::exp(cplx(0.0, -z * g.x(j))) * f[j];
                ghat *= g.spacing();
                // modes beyond the grid alias; keep the ones the grid resolves
                const int kk = static_cast<int>(std::lround(z * g.length() / kTwoPi));
                if (kk < -g.size() / 2 || kk >= g.size() / 2) continue;
                want += ghat * std::exp(cplx(0.0, kTwoPi * l * x / t));
            }
            CHECK(std::abs(s.values[static_cast<size_t>(xi_pt)] - want) < 1e-10 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("round trip, Parseval and zero-mode pairing on random cases") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ut(3.0, 9.0);
    int cases = 0;
    for (int rep = 0; rep < 25; ++rep)
        for (int n : {1, 2, 4, 8}) {
            const double t = ut(rng);
            const PeriodicGrid g(n * t, n * 32);
            const SubharmonicLattice lat(n, t);
            const auto f = testing::random_smooth(g, rng, std::min(n * 10, 15));
            const auto h = testing::random_smooth(g, rng, std::min(n * 10, 15));
            const auto back = inverse_bloch(bloch_transform(f, lat));
            CHECK(norm_l2(back - f) < 1e-12 * norm_l2(f));
            CHECK(check_parseval(f, h, lat).rel_err < 1e-10);
            const auto cell = testing::random_smooth(PeriodicGrid(t, 32), rng, 6);
            CHECK(check_zero_mode_pairing(cell, h, lat).rel_err < 1e-10);
            ++cases;
        }
    CHECK(cases == 100);
}

TEST_CASE("a T-periodic field lives only at xi = 0") {
    const double t = 4.0;
    const int n = 4;
    const auto cell = RealField::sample(PeriodicGrid(t, 16), [&](double x) { return 1.0 + std::sin(kTwoPi * x / t); });
    const auto d = bloch_transform(tile(cell, n), SubharmonicLattice(n, t));
    for (const auto& s : d.samples) {
        double mx = 0.0;
        for (auto v : s.values) mx = std::max(mx, std::abs(v));
        if (s.index == 0) {
            // B(g)(0, x) = N T g(x)
            for (int i = 0; i < 16; ++i) CHECK(std::abs(s.values[static_cast<size_t>(i)] - n * t * cell[i]) < 1e-12);
        } else {
            CHECK(mx < 1e-12);
        }
    }
}
