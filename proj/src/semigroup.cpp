#include "kdvks/semigroup.hpp"

#include "kdvks/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kdvks {

RealField SemigroupContext::uprime_field() const {
    return tile(resample(differentiate(wave.profile, 1), modes), lattice.n());
}

SemigroupContext prepare_semigroup(const WaveProfile& w, int n, int modes, std::optional<CutoffSpec> cutoff) {
    SemigroupContext ctx;
    ctx.wave = w;
    ctx.lattice = SubharmonicLattice(n, w.period);
    ctx.modes = modes;
    ctx.cutoff = cutoff ? *cutoff : compute_cutoff(w, modes);
    ctx.adjoint = adjoint_chain(w, modes);
    for (int j = ctx.lattice.first_index(); j <= ctx.lattice.last_index(); ++j) {
        const double xi = ctx.lattice.frequency(j);
        ctx.matrices.push_back(build_bloch_matrix(w, xi, modes));
        ctx.uprime.push_back(profile_derivative_coefficients(ctx.matrices.back(), w));
        if (xi != 0.0 && ctx.cutoff.rho(xi) > 0.0)
            ctx.duals.emplace_back(dual_pairs(w, xi, modes, ctx.adjoint));
        else
            ctx.duals.emplace_back(std::nullopt);
    }
    return ctx;
}

namespace {

RealField on_context_grid(const SemigroupContext& ctx, const RealField& v) {
    const auto g = ctx.grid();
    if (std::abs(v.grid.length() - g.length()) > 1e-10 * g.length())
        throw std::invalid_argument("semigroup: input field is not NT-periodic for this lattice");
    return v.size() == g.size() ? v : resample(v, g.size());
}

Eigen::MatrixXcd evolution(const BlochMatrix& m, double t) {
    return bloch_exponential(m, t);
}

Eigen::VectorXcd to_eigen(const std::vector<cplx>& v) { return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<cplx> to_std(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

RealField real_part(const PeriodicGrid& g, const std::vector<cplx>& z, double* imag_max) {
    RealField out(g);
    double im = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        out.values[i] = z[i].real();
        im = std::max(im, std::abs(z[i].imag()));
    }
    if (imag_max) *imag_max = std::max(*imag_max, im);
    return out;
}

// Accumulates per-xi coefficient blocks and turns them into a field.
struct PieceBuilder {
    const SemigroupContext& ctx;
    BlochDecomposition d;

    explicit PieceBuilder(const SemigroupContext& c)
        : ctx(c), d{c.lattice, PeriodicGrid(c.lattice.period(), c.modes), {}} {
        d.samples.resize(static_cast<size_t>(c.lattice.n()));
    }
    void set(size_t s, const Eigen::VectorXcd& coeffs) {
        d.samples[s] = BlochDecomposition::from_coefficients(ctx.lattice, d.cell_grid,
                                                             ctx.lattice.first_index() + static_cast<int>(s),
                                                             to_std(coeffs));
    }
    RealField field(double* imag_max) const { return real_part(ctx.grid(), inverse_bloch_complex(d), imag_max); }
};

}  // namespace

RealField apply_semigroup(const SemigroupContext& ctx, double t, const RealField& v_in) {
    if (t < 0.0) throw std::invalid_argument("apply_semigroup: t must be nonnegative");
    const auto v = on_context_grid(ctx, v_in);
    const auto d = bloch_transform(v, ctx.lattice);
    PieceBuilder out(ctx);
    for (size_t s = 0; s < d.samples.size(); ++s)
        out.set(s, evolution(ctx.matrices[s], t) * to_eigen(d.coefficients(s)));
    return out.field(nullptr);
}

RealField apply_semigroup(const WaveProfile& w, int n, double t, const RealField& v, int modes) {
    SemigroupContext ctx;
    ctx.wave = w;
    ctx.lattice = SubharmonicLattice(n, w.period);
    ctx.modes = modes;
    for (int j = ctx.lattice.first_index(); j <= ctx.lattice.last_index(); ++j)
        ctx.matrices.push_back(build_bloch_matrix(w, ctx.lattice.frequency(j), modes));
    return apply_semigroup(ctx, t, v);
}

RealField SemigroupPieces::remainder() const { return hf + lf_residual + critical_residual; }

SemigroupPieces decompose_semigroup(const SemigroupContext& ctx, double t, const RealField& v_in) {
    if (t < 0.0) throw std::invalid_argument("decompose_semigroup: t must be nonnegative");
    const auto v = on_context_grid(ctx, v_in);
    const auto d = bloch_transform(v, ctx.lattice);
    const double tp = ctx.lattice.period();
    const int n = ctx.modes;
    PieceBuilder hf(ctx), lf(ctx), mb(ctx), ph(ctx), cr(ctx), tot(ctx), sp(ctx);

    for (size_t s = 0; s < d.samples.size(); ++s) {
        const auto& m = ctx.matrices[s];
        const double xi = m.xi;
        const double rho = ctx.cutoff.rho(xi);
        const Eigen::VectorXcd b = to_eigen(d.coefficients(s));
        const Eigen::MatrixXcd e = evolution(m, t);
        const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(n);
        const int k0 = -m.first_mode;
        const auto& up = ctx.uprime[s];
        tot.set(s, e * b);

        if (xi == 0.0) {
            // Pi(0) b = (1/T)<1, b> 1 + <psi, b> u', and e^{L_0 t} 1 = 1 - t u'.
            const cplx mass = b(k0);
            const cplx shift = cell_inner(ctx.adjoint.coeffs, b, tp);
            Eigen::VectorXcd proj = shift * up;
            proj(k0) += mass;
            Eigen::VectorXcd boosted = (shift - t * mass) * up;
            boosted(k0) += mass;
            hf.set(s, zero);
            lf.set(s, e * (b - proj));
            mb.set(s, boosted);
            ph.set(s, zero);
            cr.set(s, zero);
            sp.set(s, zero);
            continue;
        }
        hf.set(s, (1.0 - rho) * (e * b));
        if (rho == 0.0) {
            for (auto* p : {&lf, &mb, &ph, &cr, &sp}) p->set(s, zero);
            continue;
        }
        const auto& dp = ctx.duals[s];
        if (!dp) throw std::invalid_argument("decompose_semigroup: missing dual data at xi = " + std::to_string(xi));
        const cplx ixi(0.0, xi);
        Eigen::VectorXcd proj = zero, crit = zero;
        cplx scalar = 0.0;
        for (size_t j = 0; j < 2; ++j) {
            const cplx alpha = cell_inner(dp->phi_tilde[j], b, tp) / ixi;
            const cplx growth = std::exp(dp->lambda[j] * t);
            proj += alpha * dp->phi[j];
            scalar += growth * dp->beta2[j] * alpha;
            crit += growth * alpha * (dp->phi[j] - dp->beta2[j] * up);
        }
        lf.set(s, rho * (e * (b - proj)));
        mb.set(s, zero);
        ph.set(s, rho * scalar * up);
        cr.set(s, rho * crit);
        Eigen::VectorXcd c = zero;
        c(k0) = rho * scalar;
        sp.set(s, c);
    }

    SemigroupPieces out;
    out.t = t;
    double im = 0.0;
    out.hf = hf.field(&im);
    out.lf_residual = lf.field(&im);
    out.mean_boost = mb.field(&im);
    out.phase = ph.field(&im);
    out.critical_residual = cr.field(&im);
    out.phase_shift = sp.field(&im);
    double im_total = 0.0;
    out.total = tot.field(&im_total);
    const double scale = std::max(norm_linf(out.total), 1e-300);
    out.imag_residual = std::max(im, im_total) / scale;
    return out;
}

RealField phase_propagator(const SemigroupContext& ctx, double t, const RealField& v_in, int time_derivatives,
                           double* imag_residual) {
    const auto v = on_context_grid(ctx, v_in);
    const auto d = bloch_transform(v, ctx.lattice);
    const double tp = ctx.lattice.period();
    // Only the xi = 0 coefficient of each block is nonzero, so the sum is a
    // plane-wave series; the +-xi terms are conjugate for real v.
    std::vector<cplx> c(static_cast<size_t>(ctx.grid().size()), 0.0);
    const int mtot = ctx.grid().size();
    const double nt = ctx.grid().length();
    for (size_t s = 0; s < d.samples.size(); ++s) {
        const auto& dp = ctx.duals[s];
        if (!dp) continue;
        const double rho = ctx.cutoff.rho(dp->xi);
        const Eigen::VectorXcd b = to_eigen(d.coefficients(s));
        const cplx ixi(0.0, dp->xi);
        cplx scalar = 0.0;
        for (size_t j = 0; j < 2; ++j) {
            const cplx alpha = cell_inner(dp->phi_tilde[j], b, tp) / ixi;
            scalar += std::pow(dp->lambda[j], time_derivatives) * std::exp(dp->lambda[j] * t) * dp->beta2[j] * alpha;
        }
        const int j = ctx.lattice.first_index() + static_cast<int>(s);
        c[static_cast<size_t>(slot_of_wavenumber(j, mtot))] = rho * scalar / nt;
    }
    const auto z = fft::inverse(c);
    double im = 0.0;
    auto out = real_part(ctx.grid(), z, &im);
    if (imag_residual) *imag_residual = im / std::max(norm_linf(out), 1e-300);
    return out;
}

std::string to_string(LinearQuantity q) {
    switch (q) {
        case LinearQuantity::phase: return "phase";
        case LinearQuantity::phase_dx_input: return "phase_dx_input";
        case LinearQuantity::remainder: return "remainder";
        case LinearQuantity::remainder_dx_input: return "remainder_dx_input";
    }
    return "?";
}

std::string to_string(NormKind n) { return n == NormKind::l2 ? "L2" : "Linf"; }

double predicted_exponent(const DecayRequest& r) {
    const double l = r.ell;
    if (r.norm == NormKind::linf) {
        if (r.ell != 0) throw std::invalid_argument("predicted_exponent: sup-norm rates only for ell = 0");
        if (r.quantity == LinearQuantity::phase) return 0.0;
        if (r.quantity == LinearQuantity::phase_dx_input) return -0.5;
        throw std::invalid_argument("predicted_exponent: no sup-norm rate for the remainder");
    }
    switch (r.quantity) {
        case LinearQuantity::phase: return 0.25 - l / 2.0;
        case LinearQuantity::phase_dx_input: return -0.25 - l / 2.0;
        case LinearQuantity::remainder: return -0.25;
        case LinearQuantity::remainder_dx_input: return -0.75;
    }
    return 0.0;
}

DecayMeasurement fit_power_law(std::vector<double> t, std::vector<double> value, double t_fit_min, double floor) {
    DecayMeasurement m;
    m.t = t;
    m.value = value;
    const double vmax = value.empty() ? 0.0 : *std::max_element(value.begin(), value.end());
    std::vector<double> x, y;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_fit_min || !(value[i] > floor * vmax)) continue;
        x.push_back(std::log1p(t[i]));
        y.push_back(std::log(value[i]));
        if (m.t_min == 0.0) m.t_min = t[i];
        m.t_max = t[i];
    }
    if (x.size() < 3 || m.t_max < 10.0 * m.t_min) {
        m.error = "window too short for a decade of decay";
        if (x.size() < 2) return m;
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    m.exponent_fit = sxy / sxx;
    m.prefactor = std::exp(my - m.exponent_fit * mx);
    double ss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (my + m.exponent_fit * (x[i] - mx));
        ss += r * r;
    }
    m.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
    return m;
}

std::vector<DecayMeasurement> measure_linear_decay(const SemigroupContext& ctx, const std::vector<double>& times,
                                                   const RealField& v_in, const std::vector<DecayRequest>& requests) {
    const auto v = on_context_grid(ctx, v_in);
    const auto dv = differentiate(v, 1);
    bool need_rem = false, need_rem_dx = false;
    for (const auto& r : requests) {
        need_rem |= r.quantity == LinearQuantity::remainder;
        need_rem_dx |= r.quantity == LinearQuantity::remainder_dx_input;
    }
    std::vector<std::vector<double>> series(requests.size(), std::vector<double>(times.size()));
    parallel_for(times.size(), default_workers(), [&](size_t k) {
        const double t = times[k];
        std::optional<RealField> rem, rem_dx, sp, sp_dx;
        if (need_rem) rem = decompose_semigroup(ctx, t, v).remainder();
        if (need_rem_dx) rem_dx = decompose_semigroup(ctx, t, dv).remainder();
        for (size_t i = 0; i < requests.size(); ++i) {
            const auto& r = requests[i];
            RealField f;
            switch (r.quantity) {
                case LinearQuantity::phase:
                    if (!sp) sp = phase_propagator(ctx, t, v);
                    f = *sp;
                    break;
                case LinearQuantity::phase_dx_input:
                    if (!sp_dx) sp_dx = phase_propagator(ctx, t, dv);
                    f = *sp_dx;
                    break;
                case LinearQuantity::remainder: f = *rem; break;
                case LinearQuantity::remainder_dx_input: f = *rem_dx; break;
            }
            if (r.ell > 0) f = differentiate(f, r.ell);
            series[i][k] = r.norm == NormKind::l2 ? norm_l2(f) : norm_linf(f);
        }
    });
    std::vector<DecayMeasurement> out;
    for (size_t i = 0; i < requests.size(); ++i) {
        auto m = fit_power_law(times, series[i]);
        m.n = ctx.lattice.n();
        m.request = requests[i];
        out.push_back(std::move(m));
    }
    return out;
}

double lattice_sum(int omega, double d, double period, int n, double t, bool include_zero) {
    const SubharmonicLattice lat(n, period);
    double s = 0.0;
    for (int j = lat.first_index(); j <= lat.last_index(); ++j) {
        if (j == 0 && !include_zero) continue;
        const double xi = lat.frequency(j);
        s += std::pow(xi, 2 * omega) * std::exp(-2.0 * d * xi * xi * t);
    }
    return s / n;
}

LatticeSumReport discrete_sum_bound(int omega, double d, double period, const std::vector<int>& n_list,
                                    const std::vector<double>& t_list, bool include_zero) {
    if (omega < 0 || !(d > 0.0)) throw std::invalid_argument("discrete_sum_bound: need omega >= 0 and d > 0");
    LatticeSumReport r{omega, d, period, include_zero, n_list, t_list, {}, {}, 0.0, 0.0};
    int nmax = 0;
    for (int n : n_list) nmax = std::max(nmax, n);
    double sup_half = 0.0;
    for (int n : n_list) {
        std::vector<double> row;
        double sup = 0.0;
        for (double t : t_list) {
            const double v = lattice_sum(omega, d, period, n, t, include_zero);
            row.push_back(v);
            sup = std::max(sup, v * std::pow(1.0 + t, omega + 0.5));
        }
        r.value.push_back(std::move(row));
        r.scaled_sup.push_back(sup);
        r.sup_all = std::max(r.sup_all, sup);
        if (2 * n <= nmax) sup_half = std::max(sup_half, sup);
    }
    r.doubling_change = r.sup_all > 0.0 ? (r.sup_all - sup_half) / r.sup_all : 0.0;
    return r;
}

std::map<int, double> gap_scan(const WaveProfile& w, const std::vector<int>& n_list, int modes) {
    int l = 1;
    for (int n : n_list) {
        if (n < 1) throw std::invalid_argument("gap_scan: N must be positive");
        l = std::lcm(l, n);
    }
    if (l > 8192) throw std::invalid_argument("gap_scan: common lattice too large");
    const SubharmonicLattice lat(l, w.period);
    std::vector<double> top(static_cast<size_t>(l));
    parallel_for(static_cast<size_t>(l), default_workers(), [&](size_t s) {
        const int j = lat.first_index() + static_cast<int>(s);
        const auto sl = spectrum_slice(build_bloch_matrix(w, lat.frequency(j), modes));
        double mx = -std::numeric_limits<double>::infinity();
        int skipped = 0;
        for (int k = 0; k < sl.eigenvalues.size(); ++k) {
            if (j == 0 && skipped < 2 && std::abs(sl.eigenvalues(k)) < 1e-7) {
                ++skipped;
                continue;
            }
            mx = std::max(mx, sl.eigenvalues(k).real());
        }
        top[s] = mx;
    });
    std::map<int, double> out;
    for (int n : n_list) {
        const SubharmonicLattice ln(n, w.period);
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = ln.first_index(); j <= ln.last_index(); ++j)
            mx = std::max(mx, top[static_cast<size_t>(j * (l / n) - lat.first_index())]);
        out[n] = -mx;
    }
    return out;
}

}  // namespace kdvks
