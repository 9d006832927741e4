#pragma once

#include "kdvks/bloch_transform.hpp"
#include "kdvks/critical.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kdvks {

/// Everything the NT-periodic linear evolution needs per lattice frequency:
/// truncated Bloch matrices, the cutoff, psi_adj and the critical dual pairs
/// wherever rho(xi) > 0.
struct SemigroupContext {
    WaveProfile wave;
    SubharmonicLattice lattice{1, kTwoPi};
    int modes = 0;
    CutoffSpec cutoff;
    AdjointData adjoint;
    std::vector<BlochMatrix> matrices;
    std::vector<std::optional<DualPair>> duals;
    /// Galerkin coefficients of u' in each block's ordering.
    std::vector<Eigen::VectorXcd> uprime;

    PeriodicGrid grid() const { return PeriodicGrid(lattice.n() * lattice.period(), lattice.n() * modes); }
    /// Tiled u' on the NT-grid.
    RealField uprime_field() const;
};

SemigroupContext prepare_semigroup(const WaveProfile& w, int n, int modes,
                                   std::optional<CutoffSpec> cutoff = std::nullopt);

/// e^{L t} v via Bloch transform and per-xi bloch_exponential.
RealField apply_semigroup(const SemigroupContext& ctx, double t, const RealField& v);
RealField apply_semigroup(const WaveProfile& w, int n, double t, const RealField& v, int modes);

struct SemigroupPieces {
    double t = 0.0;
    RealField hf;
    RealField lf_residual;
    RealField mean_boost;
    /// u' * s_{p,N}(t) v
    RealField phase;
    RealField critical_residual;
    /// Sum of the five pieces.
    RealField total;
    /// s_{p,N}(t) v itself.
    RealField phase_shift;
    /// Largest imaginary part dropped when forming the real pieces, relative to max |total|.
    double imag_residual = 0.0;

    /// hf + lf_residual + critical_residual.
    RealField remainder() const;
};

SemigroupPieces decompose_semigroup(const SemigroupContext& ctx, double t, const RealField& v);

/// d_t^m s_{p,N}(t) v; the imaginary part after symmetrization is reported.
RealField phase_propagator(const SemigroupContext& ctx, double t, const RealField& v, int time_derivatives = 0,
                           double* imag_residual = nullptr);

enum class LinearQuantity {
    phase,            // s_p v
    phase_dx_input,   // s_p d_x v
    remainder,        // S~ v
    remainder_dx_input,  // S~ d_x v
};
std::string to_string(LinearQuantity q);

enum class NormKind { l2, linf };
std::string to_string(NormKind n);

struct DecayRequest {
    LinearQuantity quantity = LinearQuantity::remainder;
    /// Spatial derivatives applied to the output.
    int ell = 0;
    NormKind norm = NormKind::l2;
};

/// Exponent predicted by the uniform linear estimates (0 means bounded).
double predicted_exponent(const DecayRequest& r);

struct DecayMeasurement {
    int n = 0;
    DecayRequest request;
    std::vector<double> t;
    std::vector<double> value;
    double exponent_fit = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    double t_min = 0.0, t_max = 0.0;
    /// Set when fewer than a decade of t remained above the floor.
    std::string error;
};

/// Least-squares fit of log value = log C + p log(1 + t) on samples with
/// t >= t_fit_min and value above floor * max(value).
DecayMeasurement fit_power_law(std::vector<double> t, std::vector<double> value, double t_fit_min = 1.0,
                               double floor = 1e-10);

/// Norm series of the requested quantities for input v (L^1-normalized by the
/// caller) at the given times, with power-law fits.
std::vector<DecayMeasurement> measure_linear_decay(const SemigroupContext& ctx, const std::vector<double>& times,
                                                   const RealField& v, const std::vector<DecayRequest>& requests);

struct LatticeSumReport {
    int omega = 0;
    double d = 1.0;
    double period = kTwoPi;
    bool include_zero = false;
    std::vector<int> n_list;
    std::vector<double> t_list;
    /// value[i][k] for n_list[i], t_list[k].
    std::vector<std::vector<double>> value;
    /// sup_t value * (1+t)^{omega+1/2} per N.
    std::vector<double> scaled_sup;
    double sup_all = 0.0;
    /// |sup over all N - sup over N <= max/2| / sup over all N.
    double doubling_change = 0.0;
};

/// (1/N) sum_{xi in Omega_N} xi^{2 omega} exp(-2 d xi^2 t); xi = 0 is left
/// out unless include_zero.
double lattice_sum(int omega, double d, double period, int n, double t, bool include_zero = false);
LatticeSumReport discrete_sum_bound(int omega, double d, double period, const std::vector<int>& n_list,
                                    const std::vector<double>& t_list, bool include_zero = false);

/// delta_N = -max Re sigma(L) on L^2_per(0, NT) without the double zero.
std::map<int, double> gap_scan(const WaveProfile& w, const std::vector<int>& n_list, int modes);

}  // namespace kdvks
