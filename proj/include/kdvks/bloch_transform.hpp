#pragma once

#include "kdvks/spectral.hpp"

#include <vector>

namespace kdvks {

/// The N Bloch frequencies xi in [-pi/T, pi/T) with exp(i xi N T) = 1.
/// They are xi_j = 2 pi j / (N T) for lattice indices
/// j = -floor(N/2), ..., ceil(N/2) - 1.
class SubharmonicLattice {
public:
    SubharmonicLattice(int n, double period);

    int n() const { return n_; }
    double period() const { return period_; }
    int first_index() const { return -(n_ / 2); }
    int last_index() const { return first_index() + n_ - 1; }
    double frequency(int j) const { return kTwoPi * j / (n_ * period_); }
    std::vector<double> frequencies() const;
    double spacing() const { return kTwoPi / (n_ * period_); }

private:
    int n_;
    double period_;
};

/// One Bloch sample B_T(g)(xi_j, .) stored as values on the T-cell grid.
struct BlochSample {
    int index = 0;
    double xi = 0.0;
    std::vector<cplx> values;
};

/// First T-periodic wavenumber l of the coefficient block belonging to
/// lattice index j, so that every NT-grid wavenumber j + N l lands in
/// [-M/2, M/2). Blocks have P = M/N consecutive wavenumbers.
int bloch_first_mode(int j, int cell_points);

struct BlochDecomposition {
    SubharmonicLattice lattice{1, kTwoPi};
    PeriodicGrid cell_grid;
    std::vector<BlochSample> samples;

    /// Fourier coefficients b_l of sample s ordered from bloch_first_mode upward.
    std::vector<cplx> coefficients(size_t s) const;
    /// Builds the sample for lattice index j from coefficient block b.
    static BlochSample from_coefficients(const SubharmonicLattice& lattice, const PeriodicGrid& cell,
                                         int j, const std::vector<cplx>& b);
};

/// T-periodic Bloch transform of an NT-periodic field, using the
/// unnormalized Fourier convention ghat(z) = int_{-NT/2}^{NT/2} e^{-izy} g(y) dy.
BlochDecomposition bloch_transform(const RealField& g, const SubharmonicLattice& lattice);
BlochDecomposition bloch_transform(const PeriodicGrid& grid, std::span<const cplx> values,
                                   const SubharmonicLattice& lattice);

/// g(x) = (1/NT) sum_xi e^{i xi x} B_T(g)(xi, x).
std::vector<cplx> inverse_bloch_complex(const BlochDecomposition& d);
RealField inverse_bloch(const BlochDecomposition& d);

struct IdentityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_err = 0.0;
};

/// <f,g>_{L^2(0,NT)} against (1/(N T^2)) sum_xi <B f, B g>_{L^2(0,T)}.
IdentityReport check_parseval(const RealField& f, const RealField& g, const SubharmonicLattice& lattice);

/// <f,g>_{L^2(0,NT)} against (1/T) <f, B_T(g)(0,.)>_{L^2(0,T)} for T-periodic f
/// (sampled on the T-cell grid) and NT-periodic g.
IdentityReport check_zero_mode_pairing(const RealField& f_cell, const RealField& g,
                                       const SubharmonicLattice& lattice);

}  // namespace kdvks
