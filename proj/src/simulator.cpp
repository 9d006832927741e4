#include "kdvks/simulator.hpp"

#include "kdvks/bloch_operator.hpp"
#include "kdvks/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace kdvks {

SimConfig SimConfig::for_wave(const WaveProfile& w, int n, int points_per_cell, double dt, double t_end) {
    SimConfig c;
    c.params = w.params;
    c.frame_speed = w.speed;
    c.length = n * w.period;
    c.num_points = n * points_per_cell;
    c.dt = dt;
    c.t_end = t_end;
    return c;
}

double best_translation(const RealField& f, const RealField& g) {
    if (!f.grid.same_as(g.grid)) throw std::invalid_argument("best_translation: grids differ");
    const int m = f.size();
    const auto fh = fft::forward_real(f.values);
    const auto gh = fft::forward_real(g.values);
    // C(s) = int f(x) g(x - s) dx = L sum_k conj(f_k) g_k e^{-i k s}.
    std::vector<cplx> prod(static_cast<size_t>(m));
    for (int s = 0; s < m; ++s) prod[static_cast<size_t>(s)] = std::conj(fh[static_cast<size_t>(s)]) * gh[static_cast<size_t>(s)];
    prod[static_cast<size_t>(m / 2)] = 0.0;
    // Coarse search on the grid via one inverse FFT: sum_k p_k e^{i k x_j} = C(-x_j) / L.
    const auto corr = fft::inverse(prod);
    int best = 0;
    for (int j = 1; j < m; ++j)
        if (corr[static_cast<size_t>(j)].real() > corr[static_cast<size_t>(best)].real()) best = j;
    double s = -f.grid.x(best);
    auto derivs = [&](double shift, double& d1, double& d2) {
        d1 = d2 = 0.0;
        for (int slot = 0; slot < m; ++slot) {
            const double k = f.grid.frequency(wavenumber_of_slot(slot, m));
            const cplx term = prod[static_cast<size_t>(slot)] * std::exp(cplx(0.0, -k * shift));
            d1 += (cplx(0.0, -k) * term).real();
            d2 += (-k * k * term).real();
        }
    };
    for (int it = 0; it < 20; ++it) {
        double d1, d2;
        derivs(s, d1, d2);
        if (d2 >= 0.0) break;
        const double ds = -d1 / d2;
        s += std::clamp(ds, -f.grid.spacing(), f.grid.spacing());
        if (std::abs(ds) < 1e-14 * f.grid.length()) break;
    }
    const double l = f.grid.length();
    s = std::fmod(s, l);
    if (s < 0.0) s += l;
    return s;
}

namespace {

// Contour means for the ETDRK4 coefficients (Kassam & Trefethen form).
struct EtdCoefficients {
    cplx e, e2, q, f1, f2, f3;
};

EtdCoefficients etd_coefficients(cplx lin, double h) {
    constexpr int kContour = 32;
    const cplx lh = lin * h;
    EtdCoefficients c{std::exp(lh), std::exp(0.5 * lh), 0.0, 0.0, 0.0, 0.0};
    for (int j = 0; j < kContour; ++j) {
        const cplx z = lh + std::exp(cplx(0.0, kTwoPi * (j + 0.5) / kContour));
        const cplx ez = std::exp(z), ez2 = std::exp(0.5 * z);
        const cplx z3 = z * z * z;
        c.q += (ez2 - 1.0) / z;
        c.f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
        c.f2 += (2.0 + z + ez * (z - 2.0)) / z3;
        c.f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    const double s = h / kContour;
    c.q *= s;
    c.f1 *= s;
    c.f2 *= s;
    c.f3 *= s;
    // Real-symbol modes give real means up to roundoff; keep them real.
    if (lin.imag() == 0.0)
        for (cplx* p : {&c.q, &c.f1, &c.f2, &c.f3}) *p = p->real();
    return c;
}

}  // namespace

Simulator::Simulator(const SimConfig& config, const RealField& u0) : config_(config) {
    const auto g = config.grid();
    if (!(config.dt > 0.0) || !(config.t_end >= 0.0)) throw std::invalid_argument("Simulator: need dt > 0 and t_end >= 0");
    if (config.num_points < 8 || config.num_points % 2 != 0)
        throw std::invalid_argument("Simulator: num_points must be even and >= 8");
    if (std::abs(u0.grid.length() - g.length()) > 1e-10 * g.length())
        throw std::invalid_argument("Simulator: initial data has the wrong period");
    const int m = config.num_points;
    const int kmax = config.dealias ? m / 3 : m / 2 - 1;
    const double adv = config.dt * g.frequency(kmax) * norm_linf(u0);
    if (adv >= 2.0)
        throw std::invalid_argument("Simulator: dt = " + std::to_string(config.dt) +
                                    " violates dt * k_max * |u0|_inf < 2 (value " + std::to_string(adv) + ")");
    for (double ts : config.snapshot_times) {
        const double r = ts / config.dt;
        if (ts < 0.0 || ts > config.t_end + 1e-9 * config.dt || std::abs(r - std::round(r)) > 1e-9)
            throw std::invalid_argument("Simulator: snapshot time " + std::to_string(ts) + " is not a step multiple in [0, t_end]");
    }
    if (!std::is_sorted(config.snapshot_times.begin(), config.snapshot_times.end()) ||
        std::adjacent_find(config.snapshot_times.begin(), config.snapshot_times.end()) != config.snapshot_times.end())
        throw std::invalid_argument("Simulator: snapshot times must be strictly increasing");
    {
        const double r = config.t_end / config.dt;
        if (std::abs(r - std::round(r)) > 1e-9) throw std::invalid_argument("Simulator: t_end must be a multiple of dt");
    }

    const auto u = u0.size() == m ? u0 : resample(u0, m);
    uh_ = fft::forward_real(u.values);
    const size_t sz = static_cast<size_t>(m);
    e_.resize(sz);
    e2_.resize(sz);
    q_.resize(sz);
    f1_.resize(sz);
    f2_.resize(sz);
    f3_.resize(sz);
    mask_.assign(sz, 1.0);
    ik_.resize(sz);
    for (int s = 0; s < m; ++s) {
        const int k = wavenumber_of_slot(s, m);
        const double kap = g.frequency(k);
        if (std::abs(k) > kmax || k == -m / 2) mask_[static_cast<size_t>(s)] = 0.0;
        ik_[static_cast<size_t>(s)] = k == -m / 2 ? cplx(0.0) : cplx(0.0, kap);
        const auto c = etd_coefficients(constant_state_symbol(config.params, config.frame_speed, kap), config.dt);
        e_[static_cast<size_t>(s)] = c.e;
        e2_[static_cast<size_t>(s)] = c.e2;
        q_[static_cast<size_t>(s)] = c.q;
        f1_[static_cast<size_t>(s)] = c.f1;
        f2_[static_cast<size_t>(s)] = c.f2;
        f3_[static_cast<size_t>(s)] = c.f3;
    }
    uh_[static_cast<size_t>(m / 2)] = 0.0;
    uh_[0] = uh_[0].real();
    state_.t = 0.0;
    state_.field = RealField(g, fft::inverse_real(uh_));
    state_.mass = uh_[0].real() * g.length();
}

std::vector<cplx> Simulator::nonlinear(const std::vector<cplx>& uh) const {
    // -(u^2/2)_x, conservative form so the mean is untouched.
    std::vector<cplx> w(uh.size());
    for (size_t s = 0; s < uh.size(); ++s) w[s] = mask_[s] * uh[s];
    auto u = fft::inverse_real(w);
    for (auto& x : u) x *= x;
    auto sq = fft::forward_real(u);
    for (size_t s = 0; s < sq.size(); ++s) sq[s] *= -0.5 * ik_[s] * mask_[s];
    return sq;
}

const SimState& Simulator::step() {
    const size_t m = uh_.size();
    const auto nu = nonlinear(uh_);
    std::vector<cplx> a(m), b(m), c(m);
    for (size_t s = 0; s < m; ++s) a[s] = e2_[s] * uh_[s] + q_[s] * nu[s];
    const auto na = nonlinear(a);
    for (size_t s = 0; s < m; ++s) b[s] = e2_[s] * uh_[s] + q_[s] * na[s];
    const auto nb = nonlinear(b);
    for (size_t s = 0; s < m; ++s) c[s] = e2_[s] * a[s] + q_[s] * (2.0 * nb[s] - nu[s]);
    const auto nc = nonlinear(c);
    for (size_t s = 0; s < m; ++s)
        uh_[s] = e_[s] * uh_[s] + f1_[s] * nu[s] + 2.0 * f2_[s] * (na[s] + nb[s]) + f3_[s] * nc[s];
    // Keep the state Hermitian: the imaginary field would otherwise evolve
    // under the linear part alone and grow from roundoff at the unstable
    // low wavenumbers of the constant state.
    const int mm = static_cast<int>(m);
    uh_[0] = uh_[0].real();
    uh_[m / 2] = 0.0;
    for (int k = 1; k < mm / 2; ++k) {
        const cplx a = 0.5 * (uh_[static_cast<size_t>(k)] + std::conj(uh_[static_cast<size_t>(mm - k)]));
        uh_[static_cast<size_t>(k)] = a;
        uh_[static_cast<size_t>(mm - k)] = std::conj(a);
    }
    ++steps_;
    state_.t = steps_ * config_.dt;
    state_.field.values = fft::inverse_real(uh_);
    state_.mass = uh_[0].real() * config_.length;
    double mx = 0.0;
    bool finite = true;
    for (double x : state_.field.values) {
        finite = finite && std::isfinite(x);
        mx = std::max(mx, std::abs(x));
    }
    if (!finite || mx > 1e3)
        throw NumericalError("Simulator: blow-up at t = " + std::to_string(state_.t) + " (|u|_inf = " + std::to_string(mx) +
                             ", dt = " + std::to_string(config_.dt) + ")");
    return state_;
}

Trajectory Simulator::run(const std::optional<RealField>& reference) {
    Trajectory tr;
    std::optional<RealField> ref;
    double ref_mean = 0.0;
    if (reference) {
        ref = reference->size() == config_.num_points ? *reference : resample(*reference, config_.num_points);
        ref_mean = mean(*ref);
    }
    auto record = [&] {
        tr.t.push_back(state_.t);
        tr.snapshots.push_back(state_.field);
        tr.mass.push_back(state_.mass);
        tr.energy.push_back(std::pow(norm_l2(state_.field), 2));
        if (ref) {
            RealField f = state_.field;
            const double dm = mean(f) - ref_mean;
            for (auto& x : f.values) x -= dm;
            const double s = best_translation(f, *ref);
            tr.best_shift.push_back(s);
            tr.distance_to_family.push_back(norm_l2(f - translate(*ref, s)));
        }
    };
    std::vector<long> marks;
    if (config_.snapshot_times.empty()) {
        marks = {0, std::lround(config_.t_end / config_.dt)};
    } else {
        for (double ts : config_.snapshot_times) marks.push_back(std::lround(ts / config_.dt));
    }
    const long total = std::lround(config_.t_end / config_.dt);
    size_t next = 0;
    while (next < marks.size() && marks[next] < steps_) ++next;
    for (;;) {
        if (next < marks.size() && marks[next] == steps_) {
            record();
            ++next;
        }
        if (steps_ >= total || next >= marks.size()) break;
        step();
    }
    return tr;
}

GalileanReport check_galilean(const SimConfig& config, const RealField& u0, double c_shift) {
    GalileanReport rep;
    rep.c_shift = c_shift;
    RealField u2 = u0;
    for (auto& x : u2.values) x += c_shift;
    std::vector<Trajectory> tr(2);
    parallel_for(2, default_workers(), [&](size_t i) {
        Simulator sim(config, i == 0 ? u0 : u2);
        tr[i] = sim.run();
    });
    for (size_t k = 0; k < tr[0].t.size(); ++k) {
        const double t = tr[0].t[k];
        RealField pred = translate(tr[0].snapshots[k], c_shift * t);
        for (auto& x : pred.values) x += c_shift;
        const double r = norm_linf(tr[1].snapshots[k] - pred);
        rep.t.push_back(t);
        rep.residual.push_back(r);
        rep.max_residual = std::max(rep.max_residual, r);
        rep.mass_offset_error =
            std::max(rep.mass_offset_error, std::abs(tr[1].mass[k] - tr[0].mass[k] - c_shift * config.length));
    }
    return rep;
}

MassReport check_mass(const Trajectory& traj) {
    MassReport r;
    if (traj.mass.empty()) return r;
    const double scale = std::max(std::abs(traj.mass.front()), traj.snapshots.empty() ? 0.0 : norm_l1(traj.snapshots.front()));
    if (scale == 0.0) {
        for (double m : traj.mass) r.max_drift = std::max(r.max_drift, std::abs(m));
    } else {
        for (size_t k = 0; k < traj.mass.size(); ++k) {
            const double d = std::abs(traj.mass[k] - traj.mass.front()) / scale;
            r.max_drift = std::max(r.max_drift, d);
            if (traj.t[k] > 0.0) r.drift_per_unit_time = std::max(r.drift_per_unit_time, d / traj.t[k]);
        }
    }
    return r;
}

}  // namespace kdvks
