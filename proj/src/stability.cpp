#include "kdvks/stability.hpp"

#include "kdvks/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kdvks {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::marginal: return "marginal";
        case Verdict::unknown: break;
    }
    return "unknown";
}

Verdict StabilityVerdict::verdict() const {
    if (marginal) return Verdict::marginal;
    return d1_ok && d2_ok && d3_ok ? Verdict::stable : Verdict::unstable;
}

namespace {

constexpr double kZeroTol = 1e-7;

}  // namespace

StabilityVerdict certify_stability(const WaveProfile& w, int xi_count, int modes) {
    if (xi_count < 64 || xi_count % 2 != 0)
        throw std::invalid_argument("certify_stability: xi_count must be even and >= 64");
    StabilityVerdict v;
    const double t = w.period;
    v.d1_ok = true;
    v.theta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < xi_count; ++i) {
        const int j = i - xi_count / 2;
        const double xi = kTwoPi * j / (xi_count * t);
        const auto bm = build_bloch_matrix(w, xi, modes);
        const auto s = spectrum_slice(bm);
        v.xi_grid.push_back(xi);
        if (j == 0) {
            int zeros = 0;
            double rest = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < s.eigenvalues.size(); ++k) {
                if (std::abs(s.eigenvalues(k)) < kZeroTol)
                    ++zeros;
                else
                    rest = std::max(rest, s.eigenvalues(k).real());
            }
            v.zero_count = zeros;
            v.max_real.push_back(rest);
            v.delta1 = -0.5 * rest;
            if (!(rest < 0.0)) v.d1_ok = false;
            if (std::abs(rest) < kZeroTol) v.marginal = true;
            // Geometric multiplicity from the singular values of the
            // row-scaled operator.
            Eigen::MatrixXcd scaled = bm.matrix;
            for (int r = 0; r < modes; ++r) {
                const double k2 = bm.kappa(r) * bm.kappa(r);
                scaled.row(r) /= 1.0 + k2 * k2;
            }
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(scaled);
            const auto& sv = svd.singularValues();
            const double smin = sv(modes - 1);
            v.kernel_gap_ratio = sv(modes - 2) / std::max(smin, 1e-300);
            continue;
        }
        const double top = s.eigenvalues(0).real();
        v.max_real.push_back(top);
        if (!(top < 0.0)) v.d1_ok = false;
        if (std::abs(top) < kZeroTol) v.marginal = true;
        v.theta = std::min(v.theta, -top / (xi * xi));
    }
    v.d2_ok = v.d1_ok && v.theta > 0.0;
    v.d3_ok = v.zero_count == 2 && v.kernel_gap_ratio > 1e6;
    return v;
}

StabilityCell evaluate_cell(const WaveProfile& w, const StabilityMapOptions& opts) {
    StabilityCell cell;
    cell.epsilon = w.params.epsilon;
    cell.period = w.period;
    const auto v = certify_stability(w, opts.xi_count, opts.modes);
    cell.verdict = v.verdict();
    cell.theta = v.theta;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.a1 = cell.a2 = cell.d1 = cell.d2 = nan;
    try {
        double xi_max = 0.25 * kPi / w.period;
        if (cell.verdict == Verdict::stable) xi_max = 0.5 * compute_cutoff(w, opts.modes).xi1;
        const auto ex = critical_expansion(w, xi_max, opts.expansion_samples, opts.modes);
        cell.a1 = ex.branches[0].a;
        cell.a2 = ex.branches[1].a;
        cell.d1 = ex.branches[0].d;
        cell.d2 = ex.branches[1].d;
        cell.nondegenerate = ex.nondegenerate;
    } catch (const NumericalError& e) {
        cell.note = e.what();
    }
    return cell;
}

namespace {

Verdict quick_verdict(const WaveProfile& w, const StabilityMapOptions& opts) {
    return certify_stability(w, opts.xi_count, opts.modes).verdict();
}

WaveProfile profile_near(const WaveProfile& from, double period) {
    RealField guess(PeriodicGrid(period, from.profile.size()), from.profile.values);
    return solve_profile(from.params, period, guess, from.speed);
}

}  // namespace

StabilityMap stability_map(const std::vector<double>& eps_grid, const std::vector<double>& period_grid,
                           const StabilityMapOptions& opts) {
    std::vector<double> periods = period_grid;
    std::sort(periods.begin(), periods.end());
    const size_t ne = eps_grid.size(), nt = periods.size();
    StabilityMap out;
    out.cells.resize(ne * nt);
    std::vector<std::vector<std::optional<WaveProfile>>> profiles(ne, std::vector<std::optional<WaveProfile>>(nt));

    // Profiles: one continuation per epsilon row.
    parallel_for(ne, opts.workers, [&](size_t e) {
        const auto params = WaveParameters::from_epsilon(eps_grid[e]);
        std::optional<WaveProfile> prev;
        for (size_t i = 0; i < nt; ++i) {
            auto& cell = out.cells[e * nt + i];
            cell.epsilon = eps_grid[e];
            cell.period = periods[i];
            try {
                if (prev) {
                    try {
                        prev = profile_near(*prev, periods[i]);
                    } catch (const NumericalError&) {
                        auto br = continue_in_period(*prev, periods[i], 0.05);
                        if (br.aborted) throw NumericalError("continuation stalled");
                        prev = br.profiles.back();
                    }
                } else {
                    prev = compute_wave(params, periods[i], opts.profile_points);
                }
                profiles[e][i] = prev;
            } catch (const std::exception& ex) {
                cell.note = std::string("profile: ") + ex.what();
                prev.reset();
            }
        }
    });

    parallel_for(ne * nt, opts.workers, [&](size_t idx) {
        const auto& p = profiles[idx / nt][idx % nt];
        if (!p) return;
        try {
            out.cells[idx] = evaluate_cell(*p, opts);
        } catch (const std::exception& ex) {
            out.cells[idx].verdict = Verdict::unknown;
            out.cells[idx].note = ex.what();
        }
    });

    // Bisection between neighbours with definite, differing verdicts.
    std::vector<std::pair<size_t, size_t>> edges;
    for (size_t e = 0; e < ne; ++e)
        for (size_t i = 0; i + 1 < nt; ++i) {
            const auto va = out.cells[e * nt + i].verdict, vb = out.cells[e * nt + i + 1].verdict;
            const bool definite = (va == Verdict::stable || va == Verdict::unstable) &&
                                  (vb == Verdict::stable || vb == Verdict::unstable);
            if (definite && va != vb && profiles[e][i]) edges.emplace_back(e, i);
        }
    // A marginal cell between definite, differing neighbours sits on the
    // boundary itself (to the resolution of the verdict).
    std::vector<StabilityBoundary> on_grid;
    for (size_t e = 0; e < ne; ++e)
        for (size_t i = 1; i + 1 < nt; ++i) {
            const auto va = out.cells[e * nt + i - 1].verdict, vm = out.cells[e * nt + i].verdict,
                       vb = out.cells[e * nt + i + 1].verdict;
            const bool definite = (va == Verdict::stable || va == Verdict::unstable) &&
                                  (vb == Verdict::stable || vb == Verdict::unstable);
            if (vm == Verdict::marginal && definite && va != vb) on_grid.push_back({eps_grid[e], periods[i], va, vb});
        }
    out.boundaries.resize(edges.size());
    parallel_for(edges.size(), opts.workers, [&](size_t k) {
        const auto [e, i] = edges[k];
        WaveProfile lo = *profiles[e][i];
        double tlo = periods[i], thi = periods[i + 1];
        const Verdict vlo = out.cells[e * nt + i].verdict;
        StabilityBoundary b{eps_grid[e], 0.0, vlo, out.cells[e * nt + i + 1].verdict};
        try {
            while ((thi - tlo) > opts.rel_tol * 0.5 * (thi + tlo)) {
                const double mid = 0.5 * (tlo + thi);
                auto wm = profile_near(lo, mid);
                if (quick_verdict(wm, opts) == vlo) {
                    tlo = mid;
                    lo = std::move(wm);
                } else {
                    thi = mid;
                }
            }
            b.period = 0.5 * (tlo + thi);
        } catch (const std::exception&) {
            b.period = std::numeric_limits<double>::quiet_NaN();
        }
        out.boundaries[k] = b;
    });
    out.boundaries.insert(out.boundaries.end(), on_grid.begin(), on_grid.end());
    std::sort(out.boundaries.begin(), out.boundaries.end(), [](const StabilityBoundary& a, const StabilityBoundary& b) {
        return a.epsilon != b.epsilon ? a.epsilon < b.epsilon : a.period < b.period;
    });
    return out;
}

}  // namespace kdvks
