#pragma once

#include "kdvks/profile.hpp"

#include <random>

namespace kdvks::testing {

// eps = 0 wave at T = 7.85, inside the stable band; shared by most suites.
inline const WaveProfile& reference_wave() {
    static const WaveProfile w = compute_wave(WaveParameters::from_epsilon(0.0), 7.85, 128);
    return w;
}

inline RealField random_smooth(const PeriodicGrid& g, std::mt19937_64& rng, int band, double amp = 1.0) {
    std::normal_distribution<double> nd;
    std::vector<double> a(static_cast<size_t>(band + 1)), b(a.size());
    for (int j = 0; j <= band; ++j) {
        a[static_cast<size_t>(j)] = nd(rng) * std::exp(-0.1 * j);
        b[static_cast<size_t>(j)] = j ? nd(rng) * std::exp(-0.1 * j) : 0.0;
    }
    return RealField::sample(g, [&](double x) {
        double s = 0.0;
        for (int j = 0; j <= band; ++j) {
            const double k = kTwoPi * j / g.length();
            s += a[static_cast<size_t>(j)] * std::cos(k * x) + b[static_cast<size_t>(j)] * std::sin(k * x);
        }
        return amp * s;
    });
}

}  // namespace kdvks::testing
