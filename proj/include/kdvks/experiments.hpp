#pragma once

#include "kdvks/semigroup.hpp"
#include "kdvks/simulator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kdvks {

enum class PerturbationShape { random, tone, bump, constant };
std::string to_string(PerturbationShape s);
PerturbationShape perturbation_shape_from_string(const std::string& s);

struct PerturbationSpec {
    int n = 1;
    PerturbationShape shape = PerturbationShape::bump;
    /// Peak value of the perturbation (before any E0 rescaling).
    double amplitude = 1e-2;
    std::uint64_t seed = 1;
    /// random: lattice wavenumbers 1..band (xi = 2 pi j / NT) with Gaussian weights.
    int band = 8;
    /// tone: lattice wavenumber j of cos(2 pi j x / NT).
    int tone = 1;
    /// bump: Gaussian width, centered at NT/2 and periodized.
    double width = 2.0;
    /// Subtract the mean of the perturbation.
    bool mean_zero = false;
    /// If set, rescale to this E0.
    std::optional<double> target_e0;
    int points_per_cell = 128;
};

struct Perturbation {
    RealField background;    // tiled profile on the NT-grid
    RealField perturbation;  // u0 - ubar
    RealField u0;
    double e0 = 0.0;
    double delta_m = 0.0;
    double amplitude = 0.0;
};

/// ||v||_{L1} + ||v||_{H5} on (0, NT).
double initial_norm(const RealField& v);

Perturbation make_perturbation(const PerturbationSpec& spec, const WaveProfile& w);

enum class ModulationMode { variational, linear };
std::string to_string(ModulationMode m);

struct ModulationOptions {
    /// Band limit for psi~; 0 means xi1 of the wave's cutoff.
    double xi_cut = 0.0;
    int modes = 64;
    int max_iterations = 40;
    double tolerance = 1e-13;
};

/// v(x, t) = u(x + dM t - psi~(x, t), t) - dM - ubar(x), psi~ = gamma/N + psi with
/// gamma/N the mean of psi~.
struct ModulationFit {
    ModulationMode mode = ModulationMode::variational;
    int n = 1;
    double delta_m = 0.0;
    double xi_cut = 0.0;
    std::vector<double> t;
    std::vector<double> gamma;
    std::vector<RealField> psi;
    std::vector<RealField> psi_tilde;
    std::vector<RealField> v;
    std::vector<double> residual_l2, residual_h1, residual_h5;
    /// ||u(. + dM t) - dM - ubar||_{L2}, the psi~ = 0 value.
    std::vector<double> unmodulated_l2;
    std::vector<double> psi_inf;
    /// ||psi~_x||_{L2} + ||psi~_t||_{L2} (time derivative by finite differences over snapshots).
    std::vector<double> grad_psi;
    /// Mean of v and of W = (1 - psi_x) v + gamma u'/N + psi u'.
    std::vector<double> v_mean, w_mean;
    std::vector<int> iterations;
    /// Snapshots where the optimizer stopped without meeting the tolerance.
    std::vector<int> stalled;
    std::optional<double> gamma_inf;
};

/// Needs the initial snapshot at t = 0. The linear mode uses ctx (built on
/// the same N) and evaluates psi~ = (1/N) int psi_adj v0 + s_p(t) v0.
ModulationFit extract_modulation(const Trajectory& traj, const WaveProfile& w, int n, ModulationMode mode,
                                 const ModulationOptions& opts = {}, const SemigroupContext* ctx = nullptr);

/// R of the modulated perturbation equation, written as in its derivation.
RealField perturbation_r(const RealField& v, const RealField& psi, const RealField& psi_t, double gamma_prime,
                         const WaveProfile& w, int n);
/// d_x R from an independent expansion (differences of nested quotients
/// against their psi = 0 values).
RealField perturbation_dxr_expanded(const RealField& v, const RealField& psi, const RealField& psi_t,
                                    double gamma_prime, const WaveProfile& w, int n);

/// L f = ((c - ubar) f)_x - eps f_xxx - delta (f_xx + f_xxxx) on the NT-grid of f.
RealField apply_linear_operator(const RealField& f, const WaveProfile& w);

struct ResidualReport {
    double t = 0.0;
    double lhs_l2 = 0.0;        // ||(d_t - L) W||
    double imbalance_l2 = 0.0;  // ||(d_t - L) W - d_x Q - d_x R - L(psi_x v)||
    double imbalance_rel = 0.0;
    double q_l2 = 0.0, r_l2 = 0.0, l_psi_v_l2 = 0.0;
    /// ||d_x R - expanded d_x R|| / ||d_x R||.
    double dual_mismatch = 0.0;
};

/// Uses five equally spaced slices and evaluates at the middle one with a
/// fourth-order central difference in t.
ResidualReport evaluate_perturbation_residual(const std::vector<double>& t, const std::vector<RealField>& v,
                                              const std::vector<RealField>& psi, const std::vector<double>& gamma,
                                              const WaveProfile& w, int n);

struct DecayFit {
    std::string norm;
    int n = 1;
    /// Exponential fits: rate delta in C e^{-delta t}. Power fits: exponent p in C (1+t)^p.
    double exponent = 0.0;
    double prefactor = 0.0;
    double t_min = 0.0, t_max = 0.0;
    double r_squared = 0.0;
    std::string error;
};

struct FixedNReport {
    DecayFit fit;
    double gap = 0.0;            // delta_N from the spectrum
    double rate_ratio = 0.0;     // fitted / gap
    std::vector<double> t, distance, shift;  // H1 distance and s*(t)
    double shift_change = 0.0;   // |s*(t_end) - s*(previous snapshot)|
    double shift_limit = 0.0;
};

/// Fits ||u(. + s*, t) - ubar(. - dM t) - dM||_{H1} ~ C e^{-delta t} with s*
/// optimized per snapshot, on t >= t_fit_min until the 1e-9 floor.
FixedNReport fit_fixedN_decay(const Trajectory& traj, const WaveProfile& w, int n, double gap, double t_fit_min = 5.0);

struct UniformRun {
    int n = 1;
    double e0 = 0.0;
    ModulationFit modulation;
    DecayFit residual_fit;  // L2
    DecayFit h1_fit;
    DecayFit grad_fit;
    /// zeta(t) = sup_{s <= t} (||v||_{L2} + ||grad psi~||) (1+s)^{1/4}
    std::vector<double> zeta;
    double zeta_sup = 0.0;
    /// sup_t ||psi||_inf / E0
    double psi_constant = 0.0;
};

struct UniformReport {
    std::vector<UniformRun> runs;
    double zeta_spread = 0.0;     // max/min of zeta_sup over N
    double psi_spread = 0.0;      // max/min of psi_constant over N (psi = 0 runs skipped)
    double prefactor_spread = 0.0;
};

/// Power-law fit C (1+t)^p over [t_fit_min, t_max], floors below 1e-9 masked.
DecayFit fit_power_decay(const std::vector<double>& t, const std::vector<double>& value, const std::string& name,
                         int n, double t_fit_min = 10.0);
/// Exponential fit C e^{-delta t}.
DecayFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& value, const std::string& name,
                               int n, double t_fit_min = 5.0, double floor = 1e-9);

/// Multiples of dt at 0, spacing, 2 spacing, ... up to t_end.
std::vector<double> even_snapshot_times(double t_end, double spacing, double dt);
/// About `count` times (1 + t_end)^{k/count} - 1 rounded to multiples of dt, duplicates dropped.
std::vector<double> log_snapshot_times(double t_end, int count, double dt);

UniformReport fit_uniform_decay(const std::vector<std::pair<int, Trajectory>>& runs, const std::vector<double>& e0,
                                const WaveProfile& w, const ModulationOptions& opts = {}, double t_fit_min = 10.0);

}  // namespace kdvks
