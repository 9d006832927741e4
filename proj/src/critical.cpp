#include "kdvks/critical.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace kdvks {

double CutoffSpec::rho(double xi) const {
    const double a = std::abs(xi);
    const double h = 0.5 * xi1;
    if (a <= h) return 1.0;
    if (a >= xi1) return 0.0;
    const double s = (a - h) / h;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

CutoffSpec compute_cutoff(const WaveProfile& w, int modes, int samples) {
    const auto s0 = spectrum_slice(build_bloch_matrix(w, 0.0, modes));
    CutoffSpec c;
    c.delta1 = -0.5 * s0.eigenvalues(2).real();
    if (!(c.delta1 > 0.0)) throw NumericalError("compute_cutoff: no spectral gap at xi = 0");
    const double top = kPi / w.period;
    for (int i = 1; i <= samples; ++i) {
        const double xi = top * i / samples;
        const auto s = spectrum_slice(build_bloch_matrix(w, xi, modes));
        if (!(s.eigenvalues(2).real() < -0.5 * c.delta1)) break;
        c.xi1 = xi;
    }
    if (c.xi1 == 0.0) throw NumericalError("compute_cutoff: critical eigenvalues are not isolated near xi = 0");
    return c;
}

namespace {

Eigen::VectorXcd inverse_iteration(const Eigen::MatrixXcd& a, cplx shift) {
    const int n = static_cast<int>(a.rows());
    Eigen::MatrixXcd s = a;
    s.diagonal().array() -= shift;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(s);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = cplx(1.0 + 0.1 * std::sin(1.7 * i), 0.3 * std::cos(0.9 * i));
    v.normalize();
    for (int it = 0; it < 3; ++it) {
        Eigen::VectorXcd next = lu.solve(v);
        const double nn = next.norm();
        if (!std::isfinite(nn) || nn == 0.0) break;
        v = next / nn;
    }
    return v;
}

double cell_norm(const Eigen::VectorXcd& f, double period) { return std::sqrt(period) * f.norm(); }

// <f, g> on (0, T) for coefficient vectors whose first wavenumbers differ.
cplx aligned_inner(const Eigen::VectorXcd& f, int first_f, const Eigen::VectorXcd& g, int first_g, double period) {
    cplx s = 0.0;
    for (int r = 0; r < g.size(); ++r) {
        const int idx = first_g + r - first_f;
        if (idx < 0 || idx >= f.size()) continue;
        s += std::conj(f(idx)) * g(r);
    }
    return period * s;
}

}  // namespace

cplx cell_inner(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g, double period) {
    return period * f.dot(g);
}

CriticalEigenpairs critical_eigenpairs(const BlochMatrix& m) {
    const auto s = spectrum_slice(m);
    CriticalEigenpairs out;
    out.lambda = {s.eigenvalues(0), s.eigenvalues(1)};
    out.third_real = s.eigenvalues(2).real();
    auto key = [&](cplx l) { return m.xi != 0.0 ? -l.imag() / m.xi : -l.imag(); };
    if (key(out.lambda[0]) > key(out.lambda[1])) std::swap(out.lambda[0], out.lambda[1]);
    const Eigen::MatrixXcd ah = m.matrix.adjoint();
    for (int j = 0; j < 2; ++j) {
        out.right[static_cast<size_t>(j)] = inverse_iteration(m.matrix, out.lambda[static_cast<size_t>(j)]);
        out.left[static_cast<size_t>(j)] = inverse_iteration(ah, std::conj(out.lambda[static_cast<size_t>(j)]));
    }
    return out;
}

namespace {

struct Sample {
    double xi;
    std::array<cplx, 2> lambda;
    std::array<Eigen::VectorXcd, 2> right;
};

Sample sample_at(const WaveProfile& w, double xi, int modes) {
    auto cp = critical_eigenpairs(build_bloch_matrix(w, xi, modes));
    return {xi, cp.lambda, cp.right};
}

double overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

// Least-squares coefficients of y ~ sum_p coef_p x^{powers[p]} with x scaled by s.
Eigen::VectorXd monomial_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& powers,
                             double s, double& rms) {
    const int n = static_cast<int>(x.size());
    const int p = static_cast<int>(powers.size());
    Eigen::MatrixXd a(n, p);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < p; ++k) a(i, k) = std::pow(x[static_cast<size_t>(i)] / s, powers[static_cast<size_t>(k)]);
        b(i) = y[static_cast<size_t>(i)];
    }
    Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    rms = std::sqrt((a * c - b).squaredNorm() / std::max(1, n));
    for (int k = 0; k < p; ++k) c(k) /= std::pow(s, powers[static_cast<size_t>(k)]);
    return c;
}

}  // namespace

CriticalExpansion critical_expansion(const WaveProfile& w, double xi_max, int samples, int modes) {
    if (!(xi_max > 0.0) || samples < 8) throw std::invalid_argument("critical_expansion: need xi_max > 0 and >= 8 samples");
    std::vector<double> grid;
    for (int i = 1; i <= samples; ++i) grid.push_back(xi_max * i / samples);

    std::vector<Sample> track;
    track.push_back(sample_at(w, grid[0], modes));
    std::vector<double> pending(grid.begin() + 1, grid.end());
    std::reverse(pending.begin(), pending.end());
    while (!pending.empty()) {
        const double xi = pending.back();
        auto cur = sample_at(w, xi, modes);
        const auto& prev = track.back();
        std::array<cplx, 2> pred = prev.lambda;
        if (track.size() >= 2) {
            const auto& pp = track[track.size() - 2];
            const double r = (xi - prev.xi) / (prev.xi - pp.xi);
            for (int j = 0; j < 2; ++j)
                pred[static_cast<size_t>(j)] = prev.lambda[static_cast<size_t>(j)] +
                                               r * (prev.lambda[static_cast<size_t>(j)] - pp.lambda[static_cast<size_t>(j)]);
        }
        const double keep = std::abs(pred[0] - cur.lambda[0]) + std::abs(pred[1] - cur.lambda[1]);
        const double swap = std::abs(pred[0] - cur.lambda[1]) + std::abs(pred[1] - cur.lambda[0]);
        if (swap < keep) {
            std::swap(cur.lambda[0], cur.lambda[1]);
            std::swap(cur.right[0], cur.right[1]);
        }
        const double ov = std::min(overlap(prev.right[0], cur.right[0]), overlap(prev.right[1], cur.right[1]));
        if (ov < 0.7) {
            const double mid = 0.5 * (prev.xi + xi);
            if (xi - prev.xi < 1e-6 * xi_max)
                throw NumericalError("critical_expansion: eigenvalue pairing ambiguous near xi = " + std::to_string(xi));
            pending.push_back(mid);
            continue;
        }
        track.push_back(std::move(cur));
        pending.pop_back();
    }

    const auto s0 = spectrum_slice(build_bloch_matrix(w, 0.0, modes));
    CriticalExpansion out;
    for (int j = 0; j < 2; ++j) {
        auto& br = out.branches[static_cast<size_t>(j)];
        br.index = j + 1;
        std::vector<double> xs, re, im;
        for (const auto& s : track) {
            br.xi.push_back(s.xi);
            br.lambda.push_back(s.lambda[static_cast<size_t>(j)]);
            xs.push_back(s.xi);
            re.push_back(s.lambda[static_cast<size_t>(j)].real());
            im.push_back(s.lambda[static_cast<size_t>(j)].imag());
        }
        double rms_im = 0.0, rms_re = 0.0;
        const auto ci = monomial_fit(xs, im, {1, 3, 5, 7}, xi_max, rms_im);
        const auto cr = monomial_fit(xs, re, {2, 4, 6, 8}, xi_max, rms_re);
        br.a = -ci(0);
        br.e = ci(1);
        br.d = -cr(0);
        br.fit_residual = std::hypot(rms_im, rms_re);
        br.lambda0 = std::abs(s0.eigenvalues(j));
    }
    out.nondegenerate = std::abs(out.branches[0].a - out.branches[1].a) >= 1e-6;
    return out;
}

AdjointData adjoint_chain(const WaveProfile& w, int modes) {
    const auto bm = build_bloch_matrix(w, 0.0, modes);
    const int n = modes;
    const double t = w.period;
    const int zero = -bm.first_mode;
    const auto up = profile_derivative_coefficients(bm, w);

    Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    big.topLeftCorner(n, n) = bm.matrix.adjoint();
    big.block(0, n, n, 1) = up;
    big(n, zero) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n + 1);
    rhs(zero) = -1.0 / t;
    Eigen::VectorXcd sol = big.partialPivLu().solve(rhs);
    if (!sol.allFinite()) throw NumericalError("adjoint_chain: bordered system is singular");

    AdjointData out;
    out.coeffs = sol.head(n);
    Eigen::VectorXcd target = Eigen::VectorXcd::Zero(n);
    target(zero) = -1.0 / t;
    out.chain_residual = cell_norm(bm.matrix.adjoint() * out.coeffs - target, t);
    if (out.chain_residual > 1e-7)
        throw NumericalError("adjoint_chain: solvability residual " + std::to_string(out.chain_residual) +
                             " indicates a broken Jordan structure");
    const cplx pairing = cell_inner(out.coeffs, up, t);
    out.coeffs /= std::conj(pairing);
    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(n);
    one(zero) = 1.0;
    out.s0 = 1.0 / t;
    out.mean_residual = std::abs(cell_inner(out.coeffs, one, t));
    out.pairing_residual = std::abs(cell_inner(out.coeffs, up, t) - 1.0);
    out.gram << (out.s0 * cell_inner(one, one, t)).real(), (out.s0 * cell_inner(one, up, t)).real(),
        cell_inner(out.coeffs, one, t).real(), cell_inner(out.coeffs, up, t).real();

    const auto vals = galerkin_values(bm, out.coeffs, n);
    RealField psi(PeriodicGrid(t, n));
    for (int i = 0; i < n; ++i) psi[i] = vals[static_cast<size_t>(i)].real();
    out.psi_adj = std::move(psi);
    return out;
}

DualPair dual_pairs(const WaveProfile& w, double xi, int modes, const AdjointData& adj) {
    if (xi == 0.0) throw std::invalid_argument("dual_pairs: xi must be nonzero");
    if (adj.coeffs.size() != modes) throw std::invalid_argument("dual_pairs: adjoint data resolution mismatch");
    DualPair dp;
    dp.xi = xi;
    dp.matrix = build_bloch_matrix(w, xi, modes);
    const auto cp = critical_eigenpairs(dp.matrix);
    const double t = w.period;
    const int psi_first = galerkin_first_mode(0.0, modes);
    const cplx ixi(0.0, xi);
    for (size_t j = 0; j < 2; ++j) {
        dp.lambda[j] = cp.lambda[j];
        Eigen::VectorXcd phi = cp.right[j] / cell_norm(cp.right[j], t);
        cplx b2 = aligned_inner(adj.coeffs, psi_first, phi, dp.matrix.first_mode, t);
        if (std::abs(b2) > 0.0) {
            phi *= std::conj(b2) / std::abs(b2);
            b2 = std::abs(b2);
        }
        const cplx pair = cell_inner(cp.left[j], phi, t);
        if (std::abs(pair) < 1e-12 * cell_norm(cp.left[j], t))
            throw NumericalError("dual_pairs: left and right eigenvectors are orthogonal (defective point)");
        dp.phi[j] = phi;
        dp.phi_tilde[j] = cp.left[j] * std::conj(ixi / pair);
        dp.beta2[j] = b2;
        const Eigen::VectorXcd r = dp.matrix.matrix * phi - dp.lambda[j] * phi;
        dp.eigen_residual = std::max(dp.eigen_residual, cell_norm(r, t));
    }
    for (size_t j = 0; j < 2; ++j)
        for (size_t k = 0; k < 2; ++k) {
            const cplx want = j == k ? ixi : cplx(0.0);
            dp.duality_residual =
                std::max(dp.duality_residual, std::abs(cell_inner(dp.phi_tilde[j], dp.phi[k], t) - want));
        }
    return dp;
}

}  // namespace kdvks
