#include "common.hpp"

#include <doctest.h>

using namespace kdvks;

namespace {

std::vector<cplx> naive_dft(const std::vector<cplx>& x) {
    const size_t m = x.size();
    std::vector<cplx> out(m);
    for (size_t k = 0; k < m; ++k)
        for (size_t j = 0; j < m; ++j)
            out[k] += x[j] * std::polar(1.0, -kTwoPi * static_cast<double>(j * k) / static_cast<double>(m));
    for (auto& c : out) c /= static_cast<double>(m);
    return out;
}

}  // namespace

TEST_CASE("forward transform matches a naive DFT and inverts") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int m : {8, 30, 64}) {
        std::vector<cplx> x(static_cast<size_t>(m));
        for (auto& c : x) c = {nd(rng), nd(rng)};
        const auto a = fft::forward(x);
        const auto b = naive_dft(x);
        for (int k = 0; k < m; ++k) CHECK(std::abs(a[static_cast<size_t>(k)] - b[static_cast<size_t>(k)]) < 1e-13);
        const auto back = fft::inverse(a);
        for (int k = 0; k < m; ++k) CHECK(std::abs(back[static_cast<size_t>(k)] - x[static_cast<size_t>(k)]) < 1e-13);
    }
}

TEST_CASE("slot and wavenumber maps are inverse") {
    for (int m : {8, 16, 128})
        for (int s = 0; s < m; ++s) {
            const int k = wavenumber_of_slot(s, m);
            CHECK(k >= -m / 2);
            CHECK(k < m / 2);
            CHECK(slot_of_wavenumber(k, m) == s);
        }
}

TEST_CASE("derivatives of trigonometric polynomials are exact") {
    const PeriodicGrid g(3.0, 64);
    const double k = kTwoPi * 3 / 3.0;
    const auto f = RealField::sample(g, [&](double x) { return std::sin(k * x) + 0.5 * std::cos(2 * k * x); });
    const auto d1 = differentiate(f, 1);
    const auto d4 = differentiate(f, 4);
    for (int i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        CHECK(d1[i] == doctest::Approx(k * std::cos(k * x) - k * std::sin(2 * k * x)).epsilon(1e-12));
        CHECK(d4[i] == doctest::Approx(std::pow(k, 4) * std::sin(k * x) + 8 * std::pow(k, 4) * std::cos(2 * k * x)).epsilon(1e-11).scale(9 * std::pow(k, 4)));
    }
}

TEST_CASE("norms of known functions") {
    const PeriodicGrid g(kTwoPi, 32);
    const auto s = RealField::sample(g, [](double x) { return std::sin(2 * x); });
    CHECK(norm_l2(s) == doctest::Approx(std::sqrt(kPi)));
    CHECK(norm_linf(s) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean(s) == doctest::Approx(0.0).scale(1.0));
    // H^2: ||f||^2 + ||f'||^2 + ||f''||^2 = pi (1 + 4 + 16)
    CHECK(norm_hs(s, 2) == doctest::Approx(std::sqrt(21.0 * kPi)));
    const auto one = RealField::sample(g, [](double) { return 1.0; });
    CHECK(integral(one) == doctest::Approx(kTwoPi));
    CHECK(inner(s, one) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("interpolation, translation and resampling are exact for band-limited data") {
    std::mt19937_64 rng(11);
    const PeriodicGrid g(5.0, 48);
    const auto f = testing::random_smooth(g, rng, 10);
    auto exact = [&](double x) {
        // re-evaluate through a resampled copy on a much finer grid
        return interpolate(resample(f, 256), std::vector<double>{x})[0];
    };
    std::uniform_real_distribution<double> ux(-7.0, 12.0);
    std::vector<double> pts(40);
    for (auto& p : pts) p = ux(rng);
    const auto vals = interpolate(f, pts);
    for (size_t i = 0; i < pts.size(); ++i) CHECK(vals[i] == doctest::Approx(exact(pts[i])).epsilon(1e-11));

    const double s = 0.731;
    const auto t = translate(f, s);
    const auto want = interpolate(f, [&] {
        std::vector<double> y;
        for (int i = 0; i < g.size(); ++i) y.push_back(g.x(i) - s);
        return y;
    }());
    for (int i = 0; i < g.size(); ++i) CHECK(t[i] == doctest::Approx(want[static_cast<size_t>(i)]).epsilon(1e-11));

    const auto up = resample(f, 96);
    const auto down = resample(up, 48);
    for (int i = 0; i < g.size(); ++i) CHECK(down[i] == doctest::Approx(f[i]).epsilon(1e-12));
}

TEST_CASE("tiling repeats the cell") {
    const PeriodicGrid g(2.0, 16);
    const auto f = RealField::sample(g, [](double x) { return std::cos(kPi * x) + 0.1; });
    const auto t = tile(f, 3);
    CHECK(t.grid.length() == doctest::Approx(6.0));
    REQUIRE(t.size() == 48);
    for (int i = 0; i < 48; ++i) CHECK(t[i] == f[i % 16]);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(PeriodicGrid(1.0, 7), std::invalid_argument);
    CHECK_THROWS_AS(PeriodicGrid(-1.0, 8), std::invalid_argument);
}
