#pragma once

#include "kdvks/spectral.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace kdvks {

struct WaveParameters {
    double epsilon = 0.0;
    double delta = 1.0;

    static WaveParameters from_epsilon(double eps);
};

/// Maps solutions U(X, tau) of the normalized equation to solutions of
/// u_t + E u_xxx + D u_xx + G u_xxxx + Lambda u u_x = 0 via
/// u(x, t) = u_scale * U(x / x_scale, t / t_scale).
struct ScaleFactors {
    double x = 1.0;
    double t = 1.0;
    double u = 1.0;
};

std::pair<WaveParameters, ScaleFactors> normalize_parameters(double eps_raw, double delta_raw, double gamma_raw,
                                                             double lambda_raw);

struct WaveProfile {
    WaveParameters params;
    double period = kTwoPi;
    double speed = 0.0;
    double quad_const = 0.0;
    RealField profile;
    double residual_norm = 0.0;
    /// False after a Galilean boost (profile mean no longer zero).
    bool mean_zero = true;

    const PeriodicGrid& grid() const { return profile.grid; }
    double amplitude() const { return norm_linf(profile); }
};

/// -c u + eps u'' + delta (u' + u''') + u^2/2 - q evaluated without aliasing
/// on a grid `pad` times finer than the profile grid.
RealField integrated_residual(const WaveProfile& w, int pad = 2);

struct NewtonOptions {
    int max_iterations = 50;
    double tolerance = 1e-11;
    /// Reject a converged state with sup-norm below this when the guess was
    /// nontrivial.
    double trivial_threshold = 1e-6;
};

/// Newton solve of the integrated profile equation in the mean-zero gauge.
/// Unknowns are the Fourier modes 1..K of the profile (K < M/3) and c.
WaveProfile solve_profile(const WaveParameters& params, double period, const RealField& initial_guess,
                          double c_guess, const NewtonOptions& opts = {});

/// Leading-order Stuart-Landau prediction near the Hopf onset at wavenumber
/// k = 2 pi / T: u ~ 2|a| cos(k x) with speed c. Returns nullopt when the
/// bifurcation is subcritical at this k.
struct WeaklyNonlinearPrediction {
    double speed = 0.0;
    double cos_amplitude = 0.0;
};
std::optional<WeaklyNonlinearPrediction> weakly_nonlinear_prediction(const WaveParameters& params, double period);

/// Cosine seed on a T-grid, with amplitude from the weakly nonlinear
/// prediction when supercritical and 0.1 sqrt(onset distance) otherwise.
std::pair<RealField, double> bifurcation_seed(const WaveParameters& params, double period, int num_points);

/// Seeds at the given period, then continues from near onset when the
/// direct solve fails.
WaveProfile compute_wave(const WaveParameters& params, double period, int num_points);

WaveProfile galilean_boost(const WaveProfile& w, double c_shift);

struct ContinuationStep {
    double parameter = 0.0;
    double step = 0.0;
    int newton_iterations = 0;
};

struct ContinuationBranch {
    std::vector<WaveProfile> profiles;
    std::vector<ContinuationStep> steps;
    /// Set when the step fell below the minimum before reaching the target.
    bool aborted = false;
    double stopped_at = 0.0;
};

/// Natural-parameter continuation in the period with step halving.
ContinuationBranch continue_in_period(const WaveProfile& seed, double t_end, double step,
                                      double min_step = 1e-4);

/// Continuation in eps along eps^2 + delta^2 = 1 at fixed period.
ContinuationBranch continue_in_epsilon(const WaveProfile& seed, double eps_end, double step,
                                       double min_step = 1e-4);

/// Places the profile maximum at x = 0 (a translation representative).
WaveProfile center_profile(const WaveProfile& w);

}  // namespace kdvks
