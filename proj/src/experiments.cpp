#include "kdvks/experiments.hpp"

#include "kdvks/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace kdvks {

std::string to_string(PerturbationShape s) {
    switch (s) {
        case PerturbationShape::random: return "random";
        case PerturbationShape::tone: return "tone";
        case PerturbationShape::bump: return "bump";
        case PerturbationShape::constant: return "constant";
    }
    return "?";
}

PerturbationShape perturbation_shape_from_string(const std::string& s) {
    for (auto p : {PerturbationShape::random, PerturbationShape::tone, PerturbationShape::bump, PerturbationShape::constant})
        if (to_string(p) == s) return p;
    throw std::invalid_argument("unknown perturbation shape '" + s + "' (random, tone, bump, constant)");
}

std::string to_string(ModulationMode m) { return m == ModulationMode::variational ? "variational" : "linear"; }

double initial_norm(const RealField& v) { return norm_l1(v) + norm_hs(v, 5); }

namespace {

RealField background_on(const WaveProfile& w, int n, int num_points) {
    if (num_points % n != 0) throw std::invalid_argument("grid size is not a multiple of N");
    return tile(resample(w.profile, num_points / n), n);
}

void check_nt_grid(const RealField& f, const WaveProfile& w, int n, const char* who) {
    if (std::abs(f.grid.length() - n * w.period) > 1e-10 * n * w.period)
        throw std::invalid_argument(std::string(who) + ": field is not NT-periodic");
}

// Spectral derivative with the top third of the spectrum cleared, so that
// roundoff in unresolved modes is not amplified by kappa^k.
RealField d(const RealField& f, int order = 1) {
    auto c = fft::forward_real(f.values);
    const int m = f.size();
    for (int s = 0; s < m; ++s) {
        const int k = wavenumber_of_slot(s, m);
        if (3 * std::abs(k) > m || k == -m / 2) {
            c[static_cast<size_t>(s)] = 0.0;
            continue;
        }
        cplx mult(1.0, 0.0);
        for (int j = 0; j < order; ++j) mult *= cplx(0.0, f.grid.frequency(k));
        c[static_cast<size_t>(s)] *= mult;
    }
    return {f.grid, fft::inverse_real(c)};
}

RealField mul(const RealField& a, const RealField& b) {
    RealField out(a.grid);
    for (int i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

template <class F>
RealField map(const RealField& a, F&& f) {
    RealField out(a.grid);
    for (int i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

RealField constant_field(const PeriodicGrid& g, double c) {
    RealField out(g);
    std::fill(out.values.begin(), out.values.end(), c);
    return out;
}

}  // namespace

Perturbation make_perturbation(const PerturbationSpec& spec, const WaveProfile& w) {
    if (spec.n < 1) throw std::invalid_argument("make_perturbation: N must be positive");
    if (spec.points_per_cell < 8 || spec.points_per_cell % 2) throw std::invalid_argument("make_perturbation: bad points_per_cell");
    Perturbation p;
    p.background = background_on(w, spec.n, spec.n * spec.points_per_cell);
    const auto g = p.background.grid;
    const double len = g.length();
    RealField shape(g);
    switch (spec.shape) {
        case PerturbationShape::tone:
            shape = RealField::sample(g, [&](double x) { return std::cos(kTwoPi * spec.tone * x / len); });
            break;
        case PerturbationShape::bump:
            // Periodized, so short boxes do not see a jump at the cell edge.
            shape = RealField::sample(g, [&](double x) {
                double s = 0.0;
                for (int img = -4; img <= 4; ++img) {
                    const double z = (x - 0.5 * len + img * len) / spec.width;
                    s += std::exp(-0.5 * z * z);
                }
                return s;
            });
            break;
        case PerturbationShape::constant: shape = constant_field(g, 1.0); break;
        case PerturbationShape::random: {
            if (spec.band < 1 || 3 * spec.band > g.size()) throw std::invalid_argument("make_perturbation: band out of range");
            std::mt19937_64 rng(spec.seed);
            std::normal_distribution<double> nd;
            std::vector<double> a(static_cast<size_t>(spec.band + 1)), b(a.size());
            for (int j = 1; j <= spec.band; ++j) {
                const double weight = std::exp(-std::pow(static_cast<double>(j) / spec.band, 2));
                a[static_cast<size_t>(j)] = weight * nd(rng);
                b[static_cast<size_t>(j)] = weight * nd(rng);
            }
            shape = RealField::sample(g, [&](double x) {
                double s = 0.0;
                for (int j = 1; j <= spec.band; ++j) {
                    const double k = kTwoPi * j / len;
                    s += a[static_cast<size_t>(j)] * std::cos(k * x) + b[static_cast<size_t>(j)] * std::sin(k * x);
                }
                return s;
            });
            break;
        }
    }
    if (spec.shape != PerturbationShape::constant) {
        const double mx = norm_linf(shape);
        if (mx > 0.0) shape *= 1.0 / mx;
    }
    if (spec.mean_zero) {
        const double m = mean(shape);
        for (auto& x : shape.values) x -= m;
    }
    double amp = spec.amplitude;
    if (spec.target_e0) {
        const double unit = initial_norm(shape);
        if (unit == 0.0) throw std::invalid_argument("make_perturbation: shape has zero norm, cannot match E0");
        amp = *spec.target_e0 / unit;
    }
    p.perturbation = amp * shape;
    p.amplitude = amp;
    p.u0 = p.background + p.perturbation;
    p.e0 = initial_norm(p.perturbation);
    p.delta_m = mean(p.perturbation);
    return p;
}

namespace {

// Gauss-Newton/Levenberg-Marquardt for band-limited psi~ at one snapshot.
struct PhaseFitter {
    const RealField& u;
    const RealField& ub;
    double shift;  // dM t
    double dm;
    int modes;     // lattice wavenumbers 1..modes
    std::vector<double> basis_k;

    PhaseFitter(const RealField& u_, const RealField& ub_, double shift_, double dm_, int j)
        : u(u_), ub(ub_), shift(shift_), dm(dm_), modes(j) {
        for (int k = 1; k <= j; ++k) basis_k.push_back(kTwoPi * k / u.grid.length());
    }
    int size() const { return 2 * modes + 1; }

    RealField psi(const Eigen::VectorXd& c) const {
        return RealField::sample(u.grid, [&](double x) {
            double s = c(0);
            for (int k = 0; k < modes; ++k)
                s += c(1 + 2 * k) * std::cos(basis_k[static_cast<size_t>(k)] * x) +
                     c(2 + 2 * k) * std::sin(basis_k[static_cast<size_t>(k)] * x);
            return s;
        });
    }
    std::vector<double> points(const RealField& ps) const {
        std::vector<double> y(static_cast<size_t>(u.size()));
        for (int i = 0; i < u.size(); ++i) y[static_cast<size_t>(i)] = u.grid.x(i) + shift - ps[i];
        return y;
    }
    RealField residual(const Eigen::VectorXd& c) const {
        const auto y = points(psi(c));
        const auto uy = interpolate(u, y);
        RealField r(u.grid);
        for (int i = 0; i < u.size(); ++i) r[i] = uy[static_cast<size_t>(i)] - dm - ub[i];
        return r;
    }
    double cost(const Eigen::VectorXd& c) const { return norm_l2(residual(c)); }

    // Returns iterations used; negative when stalled.
    int solve(Eigen::VectorXd& c, const ModulationOptions& opts) const {
        const int n = u.size(), p = size();
        const RealField ux = differentiate(u, 1);
        double mu = 1e-8;
        double cost0 = cost(c);
        for (int it = 1; it <= opts.max_iterations; ++it) {
            const auto ps = psi(c);
            const auto y = points(ps);
            const auto uy = interpolate(u, y);
            const auto uxy = interpolate(ux, y);
            Eigen::MatrixXd jac(n, p);
            Eigen::VectorXd r(n);
            for (int i = 0; i < n; ++i) {
                const double x = u.grid.x(i);
                r(i) = uy[static_cast<size_t>(i)] - dm - ub[i];
                jac(i, 0) = -uxy[static_cast<size_t>(i)];
                for (int k = 0; k < modes; ++k) {
                    jac(i, 1 + 2 * k) = -uxy[static_cast<size_t>(i)] * std::cos(basis_k[static_cast<size_t>(k)] * x);
                    jac(i, 2 + 2 * k) = -uxy[static_cast<size_t>(i)] * std::sin(basis_k[static_cast<size_t>(k)] * x);
                }
            }
            const Eigen::MatrixXd jtj = jac.transpose() * jac;
            const Eigen::VectorXd g = jac.transpose() * r;
            bool accepted = false;
            Eigen::VectorXd step;
            double trial_cost = cost0;
            for (int tries = 0; tries < 12; ++tries) {
                Eigen::MatrixXd a = jtj;
                a.diagonal() += mu * jtj.diagonal().cwiseMax(1e-300);
                step = a.ldlt().solve(-g);
                trial_cost = cost(c + step);
                if (trial_cost <= cost0) {
                    accepted = true;
                    break;
                }
                mu *= 10.0;
            }
            if (!accepted) return -it;
            c += step;
            const double rel = (cost0 - trial_cost) / std::max(cost0, 1e-300);
            cost0 = trial_cost;
            mu = std::max(mu / 10.0, 1e-12);
            if (step.lpNorm<Eigen::Infinity>() < 1e-10 || rel < opts.tolerance) return it;
        }
        return -opts.max_iterations;
    }
};

double wrap_near(double s, double period, double target) {
    return s - period * std::round((s - target) / period);
}

}  // namespace

ModulationFit extract_modulation(const Trajectory& traj, const WaveProfile& w, int n, ModulationMode mode,
                                 const ModulationOptions& opts, const SemigroupContext* ctx) {
    if (traj.snapshots.empty() || traj.t.front() != 0.0)
        throw std::invalid_argument("extract_modulation: trajectory must start with the t = 0 snapshot");
    const auto& g = traj.snapshots.front().grid;
    check_nt_grid(traj.snapshots.front(), w, n, "extract_modulation");
    const RealField ub = background_on(w, n, g.size());
    const RealField v0 = traj.snapshots.front() - ub;

    ModulationFit fit;
    fit.mode = mode;
    fit.n = n;
    fit.delta_m = mean(v0);
    fit.xi_cut = opts.xi_cut > 0.0 ? opts.xi_cut : compute_cutoff(w, opts.modes).xi1;
    int jmax = 0;
    while (kTwoPi * (jmax + 1) / g.length() < fit.xi_cut * (1.0 - 1e-12)) ++jmax;

    double a_shift = 0.0;
    if (mode == ModulationMode::linear) {
        if (!ctx || ctx->lattice.n() != n) throw std::invalid_argument("extract_modulation: linear mode needs a semigroup context for this N");
        const RealField pa = tile(resample(ctx->adjoint.psi_adj, g.size() / n), n);
        a_shift = integral(mul(pa, v0)) / n;
    }

    const RealField up = differentiate(ub, 1);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(2 * jmax + 1);
    for (size_t k = 0; k < traj.t.size(); ++k) {
        const double t = traj.t[k];
        const RealField& u = traj.snapshots[k];
        const double shift = fit.delta_m * t;
        PhaseFitter fitter(u, ub, shift, fit.delta_m, jmax);
        int its = 0;
        RealField pt(g);
        if (t == 0.0) {
            coeffs.setZero();
        } else if (mode == ModulationMode::linear) {
            auto sp = phase_propagator(*ctx, t, v0);
            sp = resample(sp, g.size());
            pt = sp;
            for (auto& x : pt.values) x += a_shift;
        } else {
            // Global cross-correlation for the constant part, continued from the previous snapshot.
            RealField f = u;
            for (auto& x : f.values) x -= fit.delta_m;
            const double sigma = best_translation(f, ub);
            coeffs(0) = wrap_near(shift - sigma, w.period, coeffs(0));
            Eigen::VectorXd c1 = coeffs;
            its = fitter.solve(c1, opts);
            const Eigen::VectorXd zero = Eigen::VectorXd::Zero(coeffs.size());
            const double c0 = fitter.cost(zero);
            if (fitter.cost(c1) > c0) {
                Eigen::VectorXd c2 = zero;
                const int its2 = fitter.solve(c2, opts);
                if (fitter.cost(c2) < fitter.cost(c1)) {
                    c1 = c2;
                    its = its2;
                }
                if (fitter.cost(c1) > c0) c1 = zero;
            }
            coeffs = c1;
        }
        if (mode == ModulationMode::variational || t == 0.0) pt = fitter.psi(coeffs);
        if (its < 0) fit.stalled.push_back(static_cast<int>(k));
        fit.iterations.push_back(std::abs(its));

        // v on the grid, by interpolation of u at the modulated points.
        RealField v(g);
        {
            std::vector<double> y(static_cast<size_t>(g.size()));
            for (int i = 0; i < g.size(); ++i) y[static_cast<size_t>(i)] = g.x(i) + shift - pt[i];
            const auto uy = interpolate(u, y);
            for (int i = 0; i < g.size(); ++i) v[i] = uy[static_cast<size_t>(i)] - fit.delta_m - ub[i];
        }
        const double gm = mean(pt);
        RealField ps = pt;
        for (auto& x : ps.values) x -= gm;
        fit.t.push_back(t);
        fit.gamma.push_back(n * gm);
        fit.psi.push_back(ps);
        fit.psi_tilde.push_back(pt);
        fit.residual_l2.push_back(norm_l2(v));
        fit.residual_h1.push_back(norm_hs(v, 1));
        fit.residual_h5.push_back(norm_hs(v, 5));
        fit.unmodulated_l2.push_back(fitter.cost(Eigen::VectorXd::Zero(coeffs.size())));
        fit.psi_inf.push_back(norm_linf(ps));
        fit.v_mean.push_back(mean(v));
        const RealField wf = mul(map(d(ps), [](double a) { return 1.0 - a; }), v) + (gm * 1.0) * up + mul(ps, up);
        fit.w_mean.push_back(mean(wf));
        fit.v.push_back(std::move(v));
    }
    for (size_t k = 0; k < fit.t.size(); ++k) {
        const size_t lo = k == 0 ? 0 : k - 1, hi = std::min(k + 1, fit.t.size() - 1);
        double gt = 0.0;
        if (hi > lo) gt = norm_l2((1.0 / (fit.t[hi] - fit.t[lo])) * (fit.psi_tilde[hi] - fit.psi_tilde[lo]));
        fit.grad_psi.push_back(norm_l2(d(fit.psi_tilde[k])) + gt);
    }
    if (fit.t.size() >= 2) {
        const size_t l = fit.t.size() - 1;
        const double a = fit.gamma[l] / n, b = fit.gamma[l - 1] / n;
        if (std::abs(a - b) < 1e-4) fit.gamma_inf = a;
    }
    return fit;
}

RealField apply_linear_operator(const RealField& f, const WaveProfile& w) {
    const int n = static_cast<int>(std::lround(f.grid.length() / w.period));
    check_nt_grid(f, w, n, "apply_linear_operator");
    const RealField ub = background_on(w, n, f.size());
    const RealField cu = map(ub, [&](double a) { return w.speed - a; });
    const double eps = w.params.epsilon, del = w.params.delta;
    return d(mul(cu, f)) - eps * d(f, 3) - del * (d(f, 2) + d(f, 4));
}

namespace {

struct RTerms {
    RealField px, iv, wq, p2, vx, up, upp, uppp;
};

RTerms r_terms(const RealField& v, const RealField& psi, const WaveProfile& w, int n) {
    check_nt_grid(v, w, n, "perturbation residual");
    if (!v.grid.same_as(psi.grid)) throw std::invalid_argument("perturbation residual: v and psi grids differ");
    RTerms r;
    r.px = d(psi);
    if (norm_linf(r.px) >= 0.5)
        throw std::invalid_argument("perturbation residual: |psi_x| reaches 0.5, change of variables near-singular");
    r.iv = map(r.px, [](double a) { return 1.0 / (1.0 - a); });
    r.wq = mul(r.px, r.iv);
    r.p2 = mul(r.px, r.wq);
    r.vx = d(v);
    const RealField ub = background_on(w, n, v.size());
    r.up = d(ub);
    r.upp = d(ub, 2);
    r.uppp = d(ub, 3);
    return r;
}

}  // namespace

RealField perturbation_r(const RealField& v, const RealField& psi, const RealField& psi_t, double gamma_prime,
                         const WaveProfile& w, int n) {
    const auto T = r_terms(v, psi, w, n);
    const double eps = w.params.epsilon, del = w.params.delta;
    const RealField wvx = mul(T.wq, T.vx);
    const RealField ivvx_x = d(mul(T.iv, T.vx));
    const RealField wup = mul(T.wq, T.up);
    const RealField p2up = mul(T.p2, T.up);
    const RealField p2upp = mul(T.p2, T.upp);

    RealField r = -1.0 * mul(psi_t, v) - (gamma_prime / n) * v;
    r -= eps * (d(wvx) + mul(T.wq, ivvx_x));
    r -= del * wvx;
    r -= del * (d(wvx, 2) + d(mul(T.wq, ivvx_x)) + mul(T.wq, d(mul(T.iv, ivvx_x))));
    r -= eps * (mul(T.wq, d(wup)) + d(p2up) + p2upp);
    r -= del * p2up;
    r -= del * (mul(T.iv, d(mul(T.wq, d(wup)))) + mul(T.wq, d(wup, 2)) + mul(T.wq, d(mul(T.wq, T.upp))) + d(p2up, 2) +
                d(p2upp) + mul(T.p2, T.uppp));
    return r;
}

RealField perturbation_dxr_expanded(const RealField& v, const RealField& psi, const RealField& psi_t,
                                    double gamma_prime, const WaveProfile& w, int n) {
    const auto T = r_terms(v, psi, w, n);
    const double eps = w.params.epsilon, del = w.params.delta;
    const RealField& iv = T.iv;
    const RealField& px = T.px;
    auto nest = [&](const RealField& f, int depth) {
        // d(iv d(iv ... d(iv f)))
        RealField g = f;
        for (int k = 0; k < depth; ++k) g = d(mul(iv, g));
        return g;
    };
    RealField out = -1.0 * d(mul(psi_t, v) + (gamma_prime / n) * v);
    out -= eps * (nest(T.up, 2) - T.uppp - d(mul(px, T.up), 2) - d(mul(px, T.upp)));
    out -= eps * (nest(T.vx, 2) - d(v, 3));
    out -= del * (nest(T.up, 1) - T.upp - d(mul(px, T.up)));
    out -= del * (nest(T.vx, 1) - d(v, 2));
    out -= del * (nest(T.vx, 3) - d(v, 4));
    out -= del * (nest(T.up, 3) - d(T.uppp) - d(mul(px, T.up), 3) - d(mul(px, T.upp), 2) - d(mul(px, T.uppp)));
    return out;
}

ResidualReport evaluate_perturbation_residual(const std::vector<double>& t, const std::vector<RealField>& v,
                                              const std::vector<RealField>& psi, const std::vector<double>& gamma,
                                              const WaveProfile& w, int n) {
    if (t.size() != 5 || v.size() != 5 || psi.size() != 5 || gamma.size() != 5)
        throw std::invalid_argument("evaluate_perturbation_residual: need five slices");
    const double h = t[1] - t[0];
    for (int k = 1; k < 5; ++k)
        if (std::abs(t[static_cast<size_t>(k)] - t[static_cast<size_t>(k - 1)] - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw std::invalid_argument("evaluate_perturbation_residual: slices must be equally spaced");
    const auto& g = v[2].grid;
    const RealField ub = background_on(w, n, g.size());
    const RealField up = d(ub);
    auto W = [&](size_t k) {
        return mul(map(d(psi[k]), [](double a) { return 1.0 - a; }), v[k]) + (gamma[k] / n) * up + mul(psi[k], up);
    };
    auto ddt = [&](auto&& f) { return (1.0 / (12.0 * h)) * (f(0) - 8.0 * f(1) + 8.0 * f(3) - f(4)); };
    const RealField wt = ddt([&](size_t k) { return W(k); });
    const RealField psit = ddt([&](size_t k) { return psi[k]; });
    const double gp = (gamma[0] - 8.0 * gamma[1] + 8.0 * gamma[3] - gamma[4]) / (12.0 * h);

    ResidualReport rep;
    rep.t = t[2];
    const RealField lhs = wt - apply_linear_operator(W(2), w);
    const RealField dq = d(map(v[2], [](double a) { return -0.5 * a * a; }));
    const RealField r = perturbation_r(v[2], psi[2], psit, gp, w, n);
    const RealField dr = d(r);
    const RealField dr2 = perturbation_dxr_expanded(v[2], psi[2], psit, gp, w, n);
    const RealField lpv = apply_linear_operator(mul(d(psi[2]), v[2]), w);
    const RealField imb = lhs - dq - dr - lpv;
    rep.lhs_l2 = norm_l2(lhs);
    rep.imbalance_l2 = norm_l2(imb);
    rep.q_l2 = norm_l2(dq);
    rep.r_l2 = norm_l2(dr);
    rep.l_psi_v_l2 = norm_l2(lpv);
    const double scale = std::max({rep.lhs_l2, rep.q_l2, rep.r_l2, rep.l_psi_v_l2});
    rep.imbalance_rel = scale > 0.0 ? rep.imbalance_l2 / scale : 0.0;
    const double drn = norm_l2(dr);
    rep.dual_mismatch = drn > 0.0 ? norm_l2(dr - dr2) / drn : norm_l2(dr2);
    return rep;
}

namespace {

DecayFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, DecayFit f) {
    const double n = static_cast<double>(x.size());
    if (x.size() < 3) {
        f.error = "fewer than three samples in the fit window";
        return f;
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    double ss = 0;
    for (size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - my - slope * (x[i] - mx), 2);
    f.exponent = slope;
    f.prefactor = std::exp(my - slope * mx);
    f.r_squared = syy > 0 ? 1.0 - ss / syy : 1.0;
    return f;
}

}  // namespace

DecayFit fit_power_decay(const std::vector<double>& t, const std::vector<double>& value, const std::string& name, int n,
                         double t_fit_min) {
    DecayFit f;
    f.norm = name;
    f.n = n;
    std::vector<double> x, y;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_fit_min) continue;
        if (!(value[i] > 1e-9)) break;
        x.push_back(std::log1p(t[i]));
        y.push_back(std::log(value[i]));
        if (f.t_min == 0.0) f.t_min = t[i];
        f.t_max = t[i];
    }
    f = linear_fit(x, y, f);
    if (f.error.empty() && f.t_max < 10.0 * f.t_min) f.error = "less than a decade of t above the 1e-9 floor";
    return f;
}

DecayFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& value, const std::string& name,
                               int n, double t_fit_min, double floor) {
    DecayFit f;
    f.norm = name;
    f.n = n;
    std::vector<double> x, y;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_fit_min) continue;
        if (!(value[i] > floor)) break;
        x.push_back(t[i]);
        y.push_back(std::log(value[i]));
        if (f.t_min == 0.0) f.t_min = t[i];
        f.t_max = t[i];
    }
    f = linear_fit(x, y, f);
    f.exponent = -f.exponent;  // report the rate
    if (f.error.empty() && f.exponent <= 0.0) f.error = "no exponential decay regime found";
    return f;
}

FixedNReport fit_fixedN_decay(const Trajectory& traj, const WaveProfile& w, int n, double gap, double t_fit_min) {
    if (traj.snapshots.empty() || traj.t.front() != 0.0)
        throw std::invalid_argument("fit_fixedN_decay: trajectory must start at t = 0");
    check_nt_grid(traj.snapshots.front(), w, n, "fit_fixedN_decay");
    const RealField ub = background_on(w, n, traj.snapshots.front().size());
    const double dm = mean(traj.snapshots.front() - ub);
    FixedNReport rep;
    rep.gap = gap;
    double prev = 0.0;
    for (size_t k = 0; k < traj.t.size(); ++k) {
        RealField f = traj.snapshots[k];
        for (auto& x : f.values) x -= dm;
        const double sigma = best_translation(f, ub);
        rep.t.push_back(traj.t[k]);
        rep.distance.push_back(norm_hs(f - translate(ub, sigma), 1));
        const double s = wrap_near(sigma - dm * traj.t[k], w.period, prev);
        rep.shift.push_back(s);
        prev = s;
    }
    rep.fit = fit_exponential_decay(rep.t, rep.distance, "H1", n, t_fit_min);
    rep.rate_ratio = gap > 0.0 ? rep.fit.exponent / gap : 0.0;
    if (rep.shift.size() >= 2) {
        rep.shift_limit = rep.shift.back();
        rep.shift_change = std::abs(rep.shift.back() - rep.shift[rep.shift.size() - 2]);
    }
    return rep;
}

std::vector<double> even_snapshot_times(double t_end, double spacing, double dt) {
    if (!(spacing > 0.0) || !(dt > 0.0)) throw std::invalid_argument("even_snapshot_times: need positive spacing and dt");
    const long stride = std::max(1L, std::lround(spacing / dt));
    const long last = std::lround(t_end / dt);
    std::vector<double> out;
    for (long k = 0; k <= last; k += stride) out.push_back(k * dt);
    if (out.back() < last * dt) out.push_back(last * dt);
    return out;
}

std::vector<double> log_snapshot_times(double t_end, int count, double dt) {
    if (count < 1 || !(dt > 0.0)) throw std::invalid_argument("log_snapshot_times: need count >= 1 and dt > 0");
    std::vector<long> steps{0};
    for (int k = 1; k <= count; ++k) {
        const long s = std::lround((std::pow(1.0 + t_end, static_cast<double>(k) / count) - 1.0) / dt);
        if (s > steps.back()) steps.push_back(s);
    }
    const long last = std::lround(t_end / dt);
    if (steps.back() != last) steps.push_back(last);
    std::vector<double> out;
    for (long s : steps) out.push_back(s * dt);
    return out;
}

UniformReport fit_uniform_decay(const std::vector<std::pair<int, Trajectory>>& runs, const std::vector<double>& e0,
                                const WaveProfile& w, const ModulationOptions& opts, double t_fit_min) {
    if (runs.size() != e0.size()) throw std::invalid_argument("fit_uniform_decay: one E0 per run");
    UniformReport rep;
    rep.runs.resize(runs.size());
    ModulationOptions o = opts;
    if (o.xi_cut <= 0.0) o.xi_cut = compute_cutoff(w, o.modes).xi1;
    parallel_for(runs.size(), default_workers(), [&](size_t i) {
        UniformRun r;
        r.n = runs[i].first;
        r.e0 = e0[i];
        r.modulation = extract_modulation(runs[i].second, w, r.n, ModulationMode::variational, o);
        const auto& m = r.modulation;
        r.residual_fit = fit_power_decay(m.t, m.residual_l2, "L2", r.n, t_fit_min);
        r.h1_fit = fit_power_decay(m.t, m.residual_h1, "H1", r.n, t_fit_min);
        r.grad_fit = fit_power_decay(m.t, m.grad_psi, "grad_psi", r.n, t_fit_min);
        double sup = 0.0, psi_sup = 0.0;
        for (size_t k = 0; k < m.t.size(); ++k) {
            sup = std::max(sup, (m.residual_l2[k] + m.grad_psi[k]) * std::pow(1.0 + m.t[k], 0.25));
            r.zeta.push_back(sup);
            psi_sup = std::max(psi_sup, m.psi_inf[k]);
        }
        r.zeta_sup = sup;
        r.psi_constant = r.e0 > 0.0 ? psi_sup / r.e0 : 0.0;
        rep.runs[i] = std::move(r);
    });
    auto spread = [](std::vector<double> xs) {
        xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return !(x > 0.0); }), xs.end());
        if (xs.empty()) return 0.0;
        const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
        return *hi / *lo;
    };
    std::vector<double> z, p, c;
    for (const auto& r : rep.runs) {
        z.push_back(r.zeta_sup);
        p.push_back(r.psi_constant > 1e-12 ? r.psi_constant : 0.0);
        c.push_back(r.residual_fit.prefactor);
    }
    rep.zeta_spread = spread(z);
    rep.psi_spread = spread(p);
    rep.prefactor_spread = spread(c);
    return rep;
}

}  // namespace kdvks
