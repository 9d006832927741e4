#pragma once

#include "kdvks/bloch_operator.hpp"

#include <array>
#include <vector>

namespace kdvks {

/// Smooth cutoff: 1 on |xi| <= xi1/2, 0 on |xi| >= xi1, and the bump
/// exp(1 - 1/(1 - s^2)) with s = (|xi| - xi1/2)/(xi1/2) in between.
struct CutoffSpec {
    double xi1 = 0.0;
    /// Half of the spectral gap of L_0 beyond the double zero eigenvalue.
    double delta1 = 0.0;

    double rho(double xi) const;
    double operator()(double xi) const { return rho(xi); }
};

/// xi1 is the largest sampled xi in (0, pi/T] such that the third eigenvalue
/// stays below -delta1/2 on [0, xi1].
CutoffSpec compute_cutoff(const WaveProfile& w, int modes, int samples = 64);

/// The two eigenvalues with largest real part and their right/left
/// eigenvectors, ordered so that -Im(lambda)/xi is ascending (branch 1 has
/// the smaller characteristic speed a_j).
struct CriticalEigenpairs {
    std::array<cplx, 2> lambda;
    std::array<Eigen::VectorXcd, 2> right;
    std::array<Eigen::VectorXcd, 2> left;
    /// Real part of the third eigenvalue.
    double third_real = 0.0;
};
CriticalEigenpairs critical_eigenpairs(const BlochMatrix& m);

struct CriticalBranch {
    int index = 1;
    std::vector<double> xi;
    std::vector<cplx> lambda;
    double a = 0.0;
    double d = 0.0;
    /// Complex cubic coefficient: Im part from the odd fit, Re part zero by symmetry.
    double e = 0.0;
    double fit_residual = 0.0;
    /// |lambda_j(0)| from the xi = 0 slice.
    double lambda0 = 0.0;
};

struct CriticalExpansion {
    std::array<CriticalBranch, 2> branches;
    /// False when |a_1 - a_2| < 1e-6.
    bool nondegenerate = true;
};

/// Tracks the two critical eigenvalues on (0, xi_max] and fits
/// Im lambda = -a xi + e xi^3 + ..., Re lambda = -d xi^2 + ... by least squares.
CriticalExpansion critical_expansion(const WaveProfile& w, double xi_max, int samples, int modes = 64);

struct AdjointData {
    RealField psi_adj;
    /// Galerkin coefficients at xi = 0 (first mode -M/2).
    Eigen::VectorXcd coeffs;
    double chain_residual = 0.0;
    double mean_residual = 0.0;      // |<psi, 1>|
    double pairing_residual = 0.0;   // |<psi, u'> - 1|
    double s0 = 0.0;                 // normalizer of the constant mode (1/T)
    Eigen::Matrix2d gram;            // rows {s0*1, psi}, columns {1, u'}
};

/// Solves L_0^dagger psi = -(1/T) 1 with <psi, 1> = 0, which gives <psi, u'> = 1.
AdjointData adjoint_chain(const WaveProfile& w, int modes);

struct DualPair {
    double xi = 0.0;
    BlochMatrix matrix;
    std::array<cplx, 2> lambda;
    std::array<Eigen::VectorXcd, 2> phi;
    std::array<Eigen::VectorXcd, 2> phi_tilde;
    std::array<cplx, 2> beta2;
    /// max_j ||(L_xi - lambda_j) phi_j|| relative to ||phi_j||.
    double eigen_residual = 0.0;
    /// max |<phi~_j, phi_k> - i xi delta_jk|.
    double duality_residual = 0.0;
};

/// Inner product on (0, T) of Galerkin coefficient vectors.
cplx cell_inner(const Eigen::VectorXcd& f, const Eigen::VectorXcd& g, double period);

/// Critical eigenfunctions at 0 < |xi| <= xi1 with <phi~_j, phi_k> = i xi delta_jk,
/// ||phi_j|| = 1 and beta2_j = <psi_adj, phi_j>.
DualPair dual_pairs(const WaveProfile& w, double xi, int modes, const AdjointData& adj);

}  // namespace kdvks
