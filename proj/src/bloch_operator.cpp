#include "kdvks/bloch_operator.hpp"

#include <lapacke.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kdvks {

int galerkin_first_mode(double xi, int modes) { return xi >= 0.0 ? -modes / 2 : -modes / 2 + 1; }

cplx constant_state_symbol(const WaveParameters& p, double c, double kappa) {
    const double k2 = kappa * kappa;
    return {p.delta * (k2 - k2 * k2), c * kappa + p.epsilon * k2 * kappa};
}

namespace {

// Profile spectrum cut at the first mode that reaches the roundoff floor.
// Left in, the noise beyond picks up kappa^4 in the operator and spoils
// L_0 u' = 0 at the 1e-8 level for M = 128.
std::vector<cplx> clean_profile_spectrum(const WaveProfile& w) {
    auto u = fft::forward_real(w.profile.values);
    const int mp = static_cast<int>(u.size());
    double mx = 0.0;
    for (const auto& z : u) mx = std::max(mx, std::abs(z));
    int cut = mp / 2;
    for (int k = 1; k < mp / 2; ++k)
        if (std::abs(u[static_cast<size_t>(k)]) < 1e-16 * mx) {
            cut = k;
            break;
        }
    for (int s = 0; s < mp; ++s)
        if (std::abs(wavenumber_of_slot(s, mp)) >= cut) u[static_cast<size_t>(s)] = 0.0;
    return u;
}

}  // namespace

Eigen::VectorXcd profile_derivative_coefficients(const BlochMatrix& m, const WaveProfile& w, int order) {
    const int mp = w.profile.size();
    const auto u = clean_profile_spectrum(w);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(m.modes);
    for (int r = 0; r < m.modes; ++r) {
        const int k = m.first_mode + r;
        if (std::abs(k) >= mp / 2) continue;
        out(r) = std::pow(cplx(0.0, kTwoPi * k / w.period), order) * u[static_cast<size_t>(slot_of_wavenumber(k, mp))];
    }
    return out;
}

BlochMatrix build_bloch_matrix(const WaveProfile& w, double xi, int modes) {
    if (modes < 4 || modes % 2 != 0) throw std::invalid_argument("build_bloch_matrix: modes must be even and >= 4");
    const int mp = w.profile.size();
    const auto u = clean_profile_spectrum(w);
    // Tail of the profile beyond |k| = modes/4 must be negligible.
    double total = 0.0, tail = 0.0;
    for (int s = 0; s < mp; ++s) {
        const int k = wavenumber_of_slot(s, mp);
        const double a = std::norm(u[static_cast<size_t>(s)]);
        total += a;
        if (std::abs(k) > modes / 4) tail += a;
    }
    if (total > 0.0 && std::sqrt(tail / total) > 1e-10)
        throw std::invalid_argument("build_bloch_matrix: " + std::to_string(modes) +
                                    " modes truncate a significant part of the profile spectrum");

    BlochMatrix b;
    b.xi = xi;
    b.period = w.period;
    b.modes = modes;
    b.first_mode = galerkin_first_mode(xi, modes);
    b.matrix = Eigen::MatrixXcd::Zero(modes, modes);
    auto uhat = [&](int k) -> cplx {
        if (std::abs(k) >= mp / 2) return 0.0;
        return u[static_cast<size_t>(slot_of_wavenumber(k, mp))];
    };
    const cplx I(0.0, 1.0);
    for (int r = 0; r < modes; ++r) {
        const double kap = b.kappa(r);
        for (int col = 0; col < modes; ++col) b.matrix(r, col) = -I * kap * uhat(r - col);
        b.matrix(r, r) += constant_state_symbol(w.params, w.speed, kap);
    }
    return b;
}

Eigen::VectorXcd galerkin_coefficients(const BlochMatrix& m, std::span<const cplx> cell_values) {
    const int p = static_cast<int>(cell_values.size());
    const auto c = fft::forward(cell_values);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(m.modes);
    for (int r = 0; r < m.modes; ++r) {
        const int k = m.first_mode + r;
        // Wavenumbers representable on a p-point cell: the block matching the
        // Bloch transform convention for this xi.
        const int lo = galerkin_first_mode(m.xi, p);
        if (k < lo || k >= lo + p) continue;
        out(r) = c[static_cast<size_t>(((k % p) + p) % p)];
    }
    return out;
}

Eigen::VectorXcd galerkin_coefficients(const BlochMatrix& m, const RealField& cell_field) {
    std::vector<cplx> z(cell_field.values.begin(), cell_field.values.end());
    return galerkin_coefficients(m, z);
}

std::vector<cplx> galerkin_values(const BlochMatrix& m, const Eigen::VectorXcd& coeffs, int num_points) {
    const int p = num_points;
    const int lo = galerkin_first_mode(m.xi, p);
    std::vector<cplx> c(static_cast<size_t>(p), 0.0);
    for (int r = 0; r < m.modes; ++r) {
        const int k = m.first_mode + r;
        if (k < lo || k >= lo + p) continue;
        c[static_cast<size_t>(((k % p) + p) % p)] = coeffs(r);
    }
    return fft::inverse(c);
}

SpectrumSlice spectrum_slice(const BlochMatrix& m, bool with_vectors) {
    const int n = m.modes;
    Eigen::MatrixXcd a = m.matrix;
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        const double k2 = m.kappa(r) * m.kappa(r);
        const double s = 1.0 / (1.0 + k2 * k2);
        a.row(r) *= s;
        b(r, r) = s;
    }
    Eigen::VectorXcd alpha(n), beta(n);
    Eigen::MatrixXcd vr(n, n);
    lapack_complex_double dummy;
    const lapack_int info = LAPACKE_zggev(
        LAPACK_COL_MAJOR, 'N', with_vectors ? 'V' : 'N', n, reinterpret_cast<lapack_complex_double*>(a.data()), n,
        reinterpret_cast<lapack_complex_double*>(b.data()), n, reinterpret_cast<lapack_complex_double*>(alpha.data()),
        reinterpret_cast<lapack_complex_double*>(beta.data()), &dummy, 1,
        with_vectors ? reinterpret_cast<lapack_complex_double*>(vr.data()) : &dummy, with_vectors ? n : 1);
    if (info != 0) throw NumericalError("spectrum_slice: QZ iteration failed (info " + std::to_string(info) + ")");

    Eigen::VectorXcd lam(n);
    for (int i = 0; i < n; ++i) {
        if (std::abs(beta(i)) == 0.0) throw NumericalError("spectrum_slice: infinite eigenvalue in Bloch pencil");
        lam(i) = alpha(i) / beta(i);
    }
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (lam(i).real() != lam(j).real()) return lam(i).real() > lam(j).real();
        return lam(i).imag() > lam(j).imag();
    });
    SpectrumSlice out;
    out.xi = m.xi;
    out.eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) out.eigenvalues(i) = lam(order[static_cast<size_t>(i)]);
    if (with_vectors) {
        Eigen::MatrixXcd v(n, n);
        for (int i = 0; i < n; ++i) v.col(i) = vr.col(order[static_cast<size_t>(i)]).normalized();
        out.eigenvectors = std::move(v);
    }
    return out;
}

namespace {

thread_local double split_threshold = 0.0;

lapack_logical select_slow(const lapack_complex_double* a, const lapack_complex_double* b) {
    const cplx al = *reinterpret_cast<const cplx*>(a), be = *reinterpret_cast<const cplx*>(b);
    const double nb = std::norm(be);
    return nb > 0.0 && (al * std::conj(be)).real() / nb > split_threshold;
}

Eigen::MatrixXcd checked_expm(const Eigen::MatrixXcd& a) {
    Eigen::MatrixXcd e = a.exp();
    if (!e.allFinite()) throw NumericalError("bloch_exponential: matrix exponential overflow");
    return e;
}

}  // namespace

Eigen::MatrixXcd bloch_exponential(const BlochMatrix& m, double t) {
    const int n = m.modes;
    if (t == 0.0) return Eigen::MatrixXcd::Identity(n, n);
    // Split off the slow eigenvalues at the widest gap with the upper side
    // above -4, so the slow block needs only a few squarings.
    const auto spec = spectrum_slice(m).eigenvalues;
    int split = 0;
    double gap = 0.0;
    for (int k = 0; k + 1 < n && spec(k).real() >= -4.0; ++k) {
        const double g = spec(k).real() - spec(k + 1).real();
        if (g > gap) {
            gap = g;
            split = k + 1;
        }
    }
    if (split == 0 || split == n) return checked_expm(m.matrix * t);
    split_threshold = 0.5 * (spec(split - 1).real() + spec(split).real());

    // Generalized Schur form of the row-scaled pencil (D^-1 A, D^-1).
    Eigen::MatrixXcd a = m.matrix;
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        const double k2 = m.kappa(r) * m.kappa(r);
        const double s = 1.0 / (1.0 + k2 * k2);
        a.row(r) *= s;
        b(r, r) = s;
    }
    Eigen::VectorXcd alpha(n), beta(n);
    Eigen::MatrixXcd q(n, n), z(n, n);
    lapack_int sdim = 0;
    auto lc = [](Eigen::MatrixXcd& x) { return reinterpret_cast<lapack_complex_double*>(x.data()); };
    auto lv = [](Eigen::VectorXcd& x) { return reinterpret_cast<lapack_complex_double*>(x.data()); };
    lapack_int info = LAPACKE_zgges(LAPACK_COL_MAJOR, 'V', 'V', 'S', select_slow, n, lc(a), n, lc(b), n, &sdim,
                                    lv(alpha), lv(beta), lc(q), n, lc(z), n);
    if (info != 0 || sdim != split) return checked_expm(m.matrix * t);

    // Decouple P y' = S y with the generalized Sylvester equation
    // S11 X + Y S22 = -S12, P11 X + Y P22 = -P12.
    const int k = split, r = n - k;
    Eigen::MatrixXcd s11 = a.topLeftCorner(k, k), s22 = a.bottomRightCorner(r, r);
    Eigen::MatrixXcd p11 = b.topLeftCorner(k, k), p22 = b.bottomRightCorner(r, r);
    Eigen::MatrixXcd c = -a.topRightCorner(k, r), f = -b.topRightCorner(k, r);
    double scale = 1.0, dif = 0.0;
    info = LAPACKE_ztgsyl(LAPACK_COL_MAJOR, 'N', 0, k, r, lc(s11), k, lc(s22), r, lc(c), k, lc(p11), k, lc(p22), r,
                          lc(f), k, &scale, &dif);
    if (info != 0 || scale != 1.0) return checked_expm(m.matrix * t);
    const Eigen::MatrixXcd& x = c;  // R in LAPACK's notation; Y = -L is not needed

    const Eigen::MatrixXcd g1 = p11.triangularView<Eigen::Upper>().solve(s11);
    const Eigen::MatrixXcd g2 = p22.triangularView<Eigen::Upper>().solve(s22);
    const Eigen::MatrixXcd e1 = checked_expm(g1 * t), e2 = checked_expm(g2 * t);
    // y = U w with U = [[I, X], [0, I]]; x = Z y.
    Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(n, n);
    blk.topLeftCorner(k, k) = e1;
    blk.bottomRightCorner(r, r) = e2;
    blk.topRightCorner(k, r) = x * e2 - e1 * x;
    return z * blk * z.adjoint();
}

}  // namespace kdvks
