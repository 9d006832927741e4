#pragma once

#include "kdvks/critical.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kdvks {

enum class Verdict { stable, unstable, marginal, unknown };
std::string to_string(Verdict v);

struct StabilityVerdict {
    bool d1_ok = false;
    bool d2_ok = false;
    bool d3_ok = false;
    bool marginal = false;
    /// Largest theta with Re sigma(L_xi) <= -theta xi^2 on the sampled xi.
    double theta = 0.0;
    /// Half of the gap between the double zero and the rest of sigma(L_0).
    double delta1 = 0.0;
    std::vector<double> xi_grid;
    /// Largest real part per sampled xi (excluding the double zero at xi = 0).
    std::vector<double> max_real;
    /// Number of eigenvalues of L_0 with |lambda| below the zero threshold.
    int zero_count = 0;
    /// sigma_{n-1} / sigma_n of the scaled L_0 (large when the kernel is one-dimensional).
    double kernel_gap_ratio = 0.0;

    Verdict verdict() const;
};

/// Samples xi_i = -pi/T + 2 pi i / (T xi_count) and checks (D1)-(D3).
StabilityVerdict certify_stability(const WaveProfile& w, int xi_count, int modes);

struct StabilityCell {
    double epsilon = 0.0;
    double period = 0.0;
    Verdict verdict = Verdict::unknown;
    double theta = 0.0;
    double a1 = 0.0, a2 = 0.0, d1 = 0.0, d2 = 0.0;
    bool nondegenerate = false;
    std::string note;
};

/// A verdict change between neighbouring periods of one epsilon row,
/// refined by bisection in T.
struct StabilityBoundary {
    double epsilon = 0.0;
    double period = 0.0;
    Verdict below = Verdict::unknown;
    Verdict above = Verdict::unknown;
};

struct StabilityMapOptions {
    int modes = 64;
    int xi_count = 64;
    int profile_points = 128;
    double rel_tol = 1e-3;
    /// Samples used by the critical expansion of stable cells.
    int expansion_samples = 24;
    int workers = 1;
};

struct StabilityMap {
    std::vector<StabilityCell> cells;
    std::vector<StabilityBoundary> boundaries;
};

/// Evaluates one cell from an already computed profile.
StabilityCell evaluate_cell(const WaveProfile& w, const StabilityMapOptions& opts);

StabilityMap stability_map(const std::vector<double>& eps_grid, const std::vector<double>& period_grid,
                           const StabilityMapOptions& opts);

}  // namespace kdvks
