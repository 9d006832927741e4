#include "kdvks/profile.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace kdvks {

WaveParameters WaveParameters::from_epsilon(double eps) {
    if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("epsilon must lie in [0, 1)");
    return {eps, std::sqrt(1.0 - eps * eps)};
}

std::pair<WaveParameters, ScaleFactors> normalize_parameters(double eps_raw, double delta_raw, double gamma_raw,
                                                             double lambda_raw) {
    if (!(delta_raw > 0.0) || !(gamma_raw > 0.0) || !(lambda_raw > 0.0))
        throw std::invalid_argument("normalize_parameters: delta, gamma and lambda must be positive");
    // x = a X, t = b tau, u = m U turns the coefficients into
    // E b/a^3, D b/a^2, G b/a^4, Lambda m b/a.
    const double a = std::sqrt(gamma_raw / delta_raw);
    const double e = eps_raw / (a * a * a);
    const double d = delta_raw / (a * a);
    const double b = 1.0 / std::hypot(e, d);
    const double m = a / (lambda_raw * b);
    WaveParameters p{std::abs(e * b), d * b};
    ScaleFactors s{a, b, m};
    // Negative dispersion is absorbed by the reflection x -> -x, u -> -u.
    if (e < 0.0) {
        s.x = -s.x;
        s.u = -s.u;
    }
    return {p, s};
}

namespace {

cplx profile_symbol(const WaveParameters& p, double c, double kappa) {
    return {-c - p.epsilon * kappa * kappa, p.delta * kappa * (1.0 - kappa * kappa)};
}

int retained_modes(int m) { return (m - 1) / 3; }

// Integrated residual modes 0..m/2 of a real profile with coefficients u and
// speed c; the zero mode (the quadrature constant) is left in place.
std::vector<cplx> residual_modes(const WaveParameters& p, double period, double c, const std::vector<cplx>& u) {
    const int m = static_cast<int>(u.size());
    auto vals = fft::inverse_real(u);
    for (auto& v : vals) v = 0.5 * v * v;
    auto sq = fft::forward_real(vals);
    std::vector<cplx> f(static_cast<size_t>(m / 2 + 1));
    for (int k = 0; k <= m / 2; ++k) {
        const double kap = kTwoPi * k / period;
        f[static_cast<size_t>(k)] = profile_symbol(p, c, kap) * u[static_cast<size_t>(k)] + sq[static_cast<size_t>(k)];
    }
    return f;
}

double mode_norm(const std::vector<cplx>& f, int kmax, double period) {
    double s = 0.0;
    for (int k = 1; k <= kmax; ++k) s += std::norm(f[static_cast<size_t>(k)]);
    return std::sqrt(2.0 * period * s);
}

}  // namespace

RealField integrated_residual(const WaveProfile& w, int pad) {
    // Works on Fourier coefficients so that roundoff in unused high modes is
    // not amplified by the derivative symbols.
    const auto& g = w.profile.grid;
    const int m = g.size();
    const int mp = m * pad;
    const auto u = fft::forward_real(w.profile.values);
    std::vector<cplx> up(static_cast<size_t>(mp), 0.0);
    for (int k = -m / 2 + 1; k < m / 2; ++k)
        up[static_cast<size_t>(slot_of_wavenumber(k, mp))] = u[static_cast<size_t>(slot_of_wavenumber(k, m))];
    auto vals = fft::inverse_real(up);
    for (auto& v : vals) v = 0.5 * v * v;
    auto r = fft::forward_real(vals);
    for (int s = 0; s < mp; ++s) {
        const int k = wavenumber_of_slot(s, mp);
        const double kap = kTwoPi * k / w.period;
        const cplx sym(-w.speed - w.params.epsilon * kap * kap, w.params.delta * kap * (1.0 - kap * kap));
        r[static_cast<size_t>(s)] += sym * up[static_cast<size_t>(s)];
    }
    r[0] -= w.quad_const;
    return {PeriodicGrid(w.period, mp), fft::inverse_real(r)};
}

WaveProfile solve_profile(const WaveParameters& params, double period, const RealField& initial_guess,
                          double c_guess, const NewtonOptions& opts) {
    if (!(params.delta > 0.0)) throw std::invalid_argument("solve_profile: delta must be positive");
    if (std::abs(initial_guess.grid.length() - period) > 1e-10 * period)
        throw std::invalid_argument("solve_profile: guess grid length differs from the period");
    const PeriodicGrid grid = initial_guess.grid;
    const int m = grid.size();
    const int kmax = retained_modes(m);
    const int n = 2 * kmax + 1;

    auto guess = fft::forward_real(initial_guess.values);
    std::vector<cplx> u(static_cast<size_t>(m), 0.0);
    for (int k = 1; k <= kmax; ++k) {
        u[static_cast<size_t>(k)] = guess[static_cast<size_t>(k)];
        u[static_cast<size_t>(m - k)] = std::conj(guess[static_cast<size_t>(k)]);
    }
    const std::vector<cplx> g0 = u;
    double c = c_guess;

    // Phase condition <g', u - g> = 2T sum_k Re(conj(i kappa g_k)(u_k - g_k)).
    std::vector<cplx> dg(static_cast<size_t>(kmax + 1), 0.0);
    double dg_norm = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        dg[static_cast<size_t>(k)] = cplx(0.0, kTwoPi * k / period) * g0[static_cast<size_t>(k)];
        dg_norm += std::norm(dg[static_cast<size_t>(k)]);
    }
    const bool pin_speed = std::sqrt(2.0 * period * dg_norm) < 1e-12;
    const bool nontrivial = norm_linf(initial_guess) > opts.trivial_threshold;

    auto phase = [&](const std::vector<cplx>& uu) {
        double s = 0.0;
        for (int k = 1; k <= kmax; ++k)
            s += (std::conj(dg[static_cast<size_t>(k)]) * (uu[static_cast<size_t>(k)] - g0[static_cast<size_t>(k)])).real();
        return 2.0 * period * s;
    };
    auto merit = [&](const std::vector<cplx>& f, const std::vector<cplx>& uu, double cc) {
        const double ph = pin_speed ? (cc - c_guess) : phase(uu);
        return std::hypot(mode_norm(f, kmax, period), ph);
    };

    auto f = residual_modes(params, period, c, u);
    double res = merit(f, u, c);
    int it = 0;
    // Two polishing steps past the tolerance: the linearization identities
    // downstream amplify the profile residual by t^2 over long times.
    int polish = 2;
    for (; res > opts.tolerance || polish-- > 0; ++it) {
        if (it >= opts.max_iterations && res <= opts.tolerance) break;
        if (it >= opts.max_iterations)
            throw NumericalError("solve_profile: Newton did not converge in " + std::to_string(opts.max_iterations) +
                                 " iterations (residual " + std::to_string(res) + ")");
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs(n);
        // d/d Re u_j and d/d Im u_j of the mode-k residual; the quadratic term
        // contributes u_{k-j} + u_{k+j} and i (u_{k-j} - u_{k+j}).
        auto uk = [&](int k) { return u[static_cast<size_t>(slot_of_wavenumber(k, m))]; };
        auto coef = [&](int k) { return std::abs(k) <= kmax ? uk(k) : cplx(0.0); };
        for (int k = 1; k <= kmax; ++k) {
            const cplx sym = profile_symbol(params, c, kTwoPi * k / period);
            for (int j = 1; j <= kmax; ++j) {
                cplx dre = coef(k - j) + coef(k + j);
                cplx dim = cplx(0.0, 1.0) * (coef(k - j) - coef(k + j));
                if (j == k) {
                    dre += sym;
                    dim += cplx(0.0, 1.0) * sym;
                }
                jac(k - 1, j - 1) = dre.real();
                jac(kmax + k - 1, j - 1) = dre.imag();
                jac(k - 1, kmax + j - 1) = dim.real();
                jac(kmax + k - 1, kmax + j - 1) = dim.imag();
            }
            jac(k - 1, n - 1) = -uk(k).real();
            jac(kmax + k - 1, n - 1) = -uk(k).imag();
            rhs(k - 1) = -f[static_cast<size_t>(k)].real();
            rhs(kmax + k - 1) = -f[static_cast<size_t>(k)].imag();
        }
        if (pin_speed) {
            jac(n - 1, n - 1) = 1.0;
            rhs(n - 1) = -(c - c_guess);
        } else {
            for (int j = 1; j <= kmax; ++j) {
                jac(n - 1, j - 1) = 2.0 * period * dg[static_cast<size_t>(j)].real();
                jac(n - 1, kmax + j - 1) = 2.0 * period * dg[static_cast<size_t>(j)].imag();
            }
            rhs(n - 1) = -phase(u);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        Eigen::VectorXd dx = lu.solve(rhs);
        if (!dx.allFinite()) throw NumericalError("solve_profile: singular Newton Jacobian");

        // Backtracking on the residual norm.
        double lam = 1.0;
        for (int h = 0;; ++h) {
            std::vector<cplx> trial = u;
            for (int k = 1; k <= kmax; ++k) {
                const cplx step(dx(k - 1), dx(kmax + k - 1));
                trial[static_cast<size_t>(k)] += lam * step;
                trial[static_cast<size_t>(m - k)] = std::conj(trial[static_cast<size_t>(k)]);
            }
            const double ct = c + lam * dx(n - 1);
            auto ft = residual_modes(params, period, ct, trial);
            const double rt = merit(ft, trial, ct);
            if (res <= opts.tolerance && !(rt < res)) {
                polish = 0;
                break;
            }
            if (rt < res || h >= 12) {
                u = std::move(trial);
                c = ct;
                f = std::move(ft);
                res = rt;
                break;
            }
            lam *= 0.5;
        }
        if (!std::isfinite(res)) throw NumericalError("solve_profile: Newton iterates became non-finite");
    }

    WaveProfile w;
    w.params = params;
    w.period = period;
    w.speed = c;
    w.quad_const = f[0].real();
    w.profile = RealField(grid, fft::inverse_real(u));
    w.residual_norm = norm_l2(integrated_residual(w));
    if (nontrivial && w.amplitude() < opts.trivial_threshold)
        throw NumericalError("solve_profile: converged to the trivial state although a wave was requested");
    return w;
}

std::optional<WeaklyNonlinearPrediction> weakly_nonlinear_prediction(const WaveParameters& p, double period) {
    const double k = kTwoPi / period;
    const double k2 = k * k;
    if (std::abs(1.0 - 3.0 * k2) < 1e-12) return std::nullopt;
    const double c = -2.0 * p.epsilon * k2 * (1.0 - 2.0 * k2) / (1.0 - 3.0 * k2);
    const cplx l1 = profile_symbol(p, c, k);
    const cplx l2 = profile_symbol(p, c, 2.0 * k);
    const double a2 = 2.0 * (l1 * l2).real();
    if (!(a2 > 0.0)) return std::nullopt;
    return WeaklyNonlinearPrediction{c, 2.0 * std::sqrt(a2)};
}

std::pair<RealField, double> bifurcation_seed(const WaveParameters& params, double period, int num_points) {
    PeriodicGrid g(period, num_points);
    const double k = kTwoPi / period;
    double amp = 0.1 * std::sqrt(std::max(0.0, 1.0 - k));
    double c = 0.0;
    if (auto pred = weakly_nonlinear_prediction(params, period)) {
        amp = pred->cos_amplitude;
        c = pred->speed;
    }
    return {RealField::sample(g, [&](double x) { return amp * std::cos(k * x); }), c};
}

namespace {

WaveProfile rescale_period(const WaveProfile& w, double period) {
    // Same samples on the stretched grid.
    WaveProfile out = w;
    out.period = period;
    out.profile = RealField(PeriodicGrid(period, w.profile.size()), w.profile.values);
    return out;
}

template <class Solve>
ContinuationBranch continue_generic(const WaveProfile& seed, double from, double to, double step, double min_step,
                                    Solve&& solve) {
    ContinuationBranch br;
    br.profiles.push_back(seed);
    br.steps.push_back({from, 0.0, 0});
    const double dir = to >= from ? 1.0 : -1.0;
    double h = std::abs(step);
    double p = from;
    while (dir * (to - p) > 1e-12) {
        const double next = dir > 0 ? std::min(p + h, to) : std::max(p - h, to);
        try {
            br.profiles.push_back(solve(br.profiles.back(), next));
            br.steps.push_back({next, std::abs(next - p), 0});
            p = next;
            h = std::min(std::abs(step), 1.5 * h);
        } catch (const NumericalError&) {
            h *= 0.5;
            if (h < min_step) {
                br.aborted = true;
                break;
            }
        }
    }
    br.stopped_at = p;
    return br;
}

}  // namespace

ContinuationBranch continue_in_period(const WaveProfile& seed, double t_end, double step, double min_step) {
    return continue_generic(seed, seed.period, t_end, step, min_step, [](const WaveProfile& prev, double t) {
        auto guess = rescale_period(prev, t);
        return solve_profile(prev.params, t, guess.profile, prev.speed);
    });
}

ContinuationBranch continue_in_epsilon(const WaveProfile& seed, double eps_end, double step, double min_step) {
    return continue_generic(seed, seed.params.epsilon, eps_end, step, min_step, [](const WaveProfile& prev, double e) {
        return solve_profile(WaveParameters::from_epsilon(e), prev.period, prev.profile, prev.speed);
    });
}

WaveProfile compute_wave(const WaveParameters& params, double period, int num_points) {
    const double k = kTwoPi / period;
    if (k >= 1.0) throw std::invalid_argument("compute_wave: no Hopf-born wave for period <= 2 pi");
    try {
        auto [seed, c] = bifurcation_seed(params, period, num_points);
        return center_profile(solve_profile(params, period, seed, c));
    } catch (const NumericalError&) {
    }
    // Start close to onset where the expansion is reliable and continue.
    const double t0 = kTwoPi / 0.97;
    auto [seed, c] = bifurcation_seed(params, t0, num_points);
    auto start = solve_profile(params, t0, seed, c);
    auto br = continue_in_period(start, period, 0.05);
    if (br.aborted) throw NumericalError("compute_wave: continuation in the period stalled at T=" +
                                         std::to_string(br.stopped_at));
    return center_profile(br.profiles.back());
}

WaveProfile galilean_boost(const WaveProfile& w, double c_shift) {
    WaveProfile out = w;
    for (auto& v : out.profile.values) v += c_shift;
    out.speed = w.speed + c_shift;
    out.quad_const = w.quad_const - w.speed * c_shift - 0.5 * c_shift * c_shift;
    out.mean_zero = w.mean_zero && c_shift == 0.0;
    out.residual_norm = norm_l2(integrated_residual(out));
    return out;
}

WaveProfile center_profile(const WaveProfile& w) {
    const auto& v = w.profile.values;
    const auto imax = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    // Refine the maximum location with a few Newton steps on u'.
    double x = w.profile.grid.x(imax);
    const auto d1 = differentiate(w.profile, 1);
    const auto d2 = differentiate(w.profile, 2);
    for (int it = 0; it < 20; ++it) {
        const double pt[1] = {x};
        const double a = interpolate(d1, pt)[0];
        const double b = interpolate(d2, pt)[0];
        if (b >= 0.0) break;
        const double dx = -a / b;
        x += dx;
        if (std::abs(dx) < 1e-14 * w.period) break;
    }
    WaveProfile out = w;
    out.profile = translate(w.profile, -x);
    out.residual_norm = norm_l2(integrated_residual(out));
    return out;
}

}  // namespace kdvks
