#pragma once

#include "kdvks/profile.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace kdvks {

/// Fourier-Galerkin truncation of the Bloch operator
/// L_xi = (d+i xi)((c-u) .) - eps (d+i xi)^3 - delta((d+i xi)^2 + (d+i xi)^4)
/// on the modes k = first_mode, ..., first_mode + modes - 1 (kappa_k = xi + 2 pi k / T).
struct BlochMatrix {
    double xi = 0.0;
    double period = kTwoPi;
    int modes = 0;
    int first_mode = 0;
    Eigen::MatrixXcd matrix;

    double kappa(int row) const { return xi + kTwoPi * (first_mode + row) / period; }
};

/// First retained mode: [-M/2, M/2) for xi >= 0 and (-M/2, M/2] for xi < 0,
/// matching the coefficient blocks of the Bloch transform.
int galerkin_first_mode(double xi, int modes);

BlochMatrix build_bloch_matrix(const WaveProfile& w, double xi, int modes);

/// Fourier coefficients of a T-periodic cell field in the matrix ordering.
/// Modes outside the retained range are dropped.
Eigen::VectorXcd galerkin_coefficients(const BlochMatrix& m, std::span<const cplx> cell_values);
Eigen::VectorXcd galerkin_coefficients(const BlochMatrix& m, const RealField& cell_field);
/// Coefficients of d_x^order u in the matrix ordering, roundoff modes removed.
Eigen::VectorXcd profile_derivative_coefficients(const BlochMatrix& m, const WaveProfile& w, int order = 1);
/// Inverse of galerkin_coefficients on a cell grid with `num_points` samples.
std::vector<cplx> galerkin_values(const BlochMatrix& m, const Eigen::VectorXcd& coeffs, int num_points);

struct SpectrumSlice {
    double xi = 0.0;
    /// Sorted by descending real part (ties by imaginary part).
    Eigen::VectorXcd eigenvalues;
    /// Right eigenvectors as columns (same order), present on request.
    std::optional<Eigen::MatrixXcd> eigenvectors;
};

/// All eigenvalues of the truncated operator. The problem is solved as the
/// pencil (D^-1 A, D^-1) with D = diag(1 + kappa^4) via complex QZ, which
/// keeps the small critical eigenvalues accurate despite the kappa^4 growth
/// of the diagonal.
SpectrumSlice spectrum_slice(const BlochMatrix& m, bool with_vectors = false);

/// e^{L_xi t} for the truncated operator. The slow eigenvalues are split
/// from the stiff ones through the generalized Schur form of the scaled
/// pencil, so the Jordan part near zero is exponentiated without the many
/// squarings a plain Pade evaluation needs at |A t| ~ 1e9.
Eigen::MatrixXcd bloch_exponential(const BlochMatrix& m, double t);

/// Eigenvalues of the constant state u = 0: i c kappa + i eps kappa^3 + delta (kappa^2 - kappa^4).
cplx constant_state_symbol(const WaveParameters& p, double c, double kappa);

}  // namespace kdvks
