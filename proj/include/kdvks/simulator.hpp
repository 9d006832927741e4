#pragma once

#include "kdvks/profile.hpp"

#include <optional>
#include <vector>

namespace kdvks {

/// u_t = c u_x - eps u_xxx - delta (u_xx + u_xxxx) - u u_x on [0, length).
struct SimConfig {
    WaveParameters params;
    double frame_speed = 0.0;
    double length = kTwoPi;
    int num_points = 128;
    double dt = 1e-2;
    double t_end = 1.0;
    /// Output times; each must be a multiple of dt (to 1e-9 dt). Empty means
    /// only t = 0 and t_end.
    std::vector<double> snapshot_times;
    bool dealias = true;

    PeriodicGrid grid() const { return PeriodicGrid(length, num_points); }
    static SimConfig for_wave(const WaveProfile& w, int n, int points_per_cell, double dt, double t_end);
};

struct SimState {
    double t = 0.0;
    RealField field;
    double mass = 0.0;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<RealField> snapshots;
    /// Diagnostics at every snapshot.
    std::vector<double> mass;
    std::vector<double> energy;  // ||u||_{L2}^2
    /// min over s of ||u - dM - u_ref(. - s)||_{L2}; empty without a reference.
    std::vector<double> distance_to_family;
    std::vector<double> best_shift;
};

/// Shift s maximizing the L2 correlation of f with g(. - s); coarse grid
/// search followed by Newton on the trigonometric correlation.
double best_translation(const RealField& f, const RealField& g);

/// Fourth-order exponential time differencing (Cox-Matthews) with the
/// phi-function coefficients evaluated on a 32-point contour.
class Simulator {
public:
    /// Throws std::invalid_argument when dt violates the advective bound
    /// dt * k_max * ||u0||_inf < 2 for the retained wavenumbers.
    Simulator(const SimConfig& config, const RealField& u0);

    const SimConfig& config() const { return config_; }
    const SimState& state() const { return state_; }
    /// One step; throws NumericalError when ||u||_inf exceeds 1e3 or turns non-finite.
    const SimState& step();
    /// Steps to t_end and records snapshots, with distance to the translates
    /// of `reference` (shifted by the mass offset) when given.
    Trajectory run(const std::optional<RealField>& reference = std::nullopt);

private:
    std::vector<cplx> nonlinear(const std::vector<cplx>& uh) const;

    SimConfig config_;
    SimState state_;
    std::vector<cplx> uh_;
    std::vector<cplx> e_, e2_, q_, f1_, f2_, f3_;
    std::vector<double> mask_;
    std::vector<cplx> ik_;
    long steps_ = 0;
};

/// u0 and u0 + c_shift evolved side by side; max over snapshots of
/// |u2(x, t) - u1(x - c_shift t, t) - c_shift|.
struct GalileanReport {
    double c_shift = 0.0;
    double max_residual = 0.0;
    double mass_offset_error = 0.0;  // |M2 - M1 - c_shift * L|
    std::vector<double> t, residual;
};
GalileanReport check_galilean(const SimConfig& config, const RealField& u0, double c_shift);

struct MassReport {
    double max_drift = 0.0;           // max |M(t) - M(0)| / max(|M(0)|, ||u0||_L1)
    double drift_per_unit_time = 0.0;
};
MassReport check_mass(const Trajectory& traj);

}  // namespace kdvks
