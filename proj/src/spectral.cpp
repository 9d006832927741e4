#include "kdvks/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace kdvks {

PeriodicGrid::PeriodicGrid(double length, int num_points) : length_(length), num_points_(num_points) {
    if (!(length > 0.0) || !std::isfinite(length))
        throw std::invalid_argument("PeriodicGrid: length must be positive");
    if (num_points < 16 || num_points % 2 != 0)
        throw std::invalid_argument("PeriodicGrid: num_points must be even and >= 16, got " +
                                    std::to_string(num_points));
}

bool PeriodicGrid::same_as(const PeriodicGrid& other, double rel_tol) const {
    return num_points_ == other.num_points_ &&
           std::abs(length_ - other.length_) <= rel_tol * std::max(length_, other.length_);
}

RealField::RealField(PeriodicGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid.size())
        throw std::invalid_argument("RealField: value count does not match grid");
}

RealField& RealField::operator+=(const RealField& o) {
    if (!grid.same_as(o.grid)) throw std::invalid_argument("RealField: grid mismatch");
    for (size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

RealField& RealField::operator-=(const RealField& o) {
    if (!grid.same_as(o.grid)) throw std::invalid_argument("RealField: grid mismatch");
    for (size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

RealField& RealField::operator*=(double s) {
    for (auto& v : values) v *= s;
    return *this;
}

RealField operator+(RealField a, const RealField& b) { return a += b; }
RealField operator-(RealField a, const RealField& b) { return a -= b; }
RealField operator*(double s, RealField a) { return a *= s; }

namespace fft {
namespace {

// FFTW planning is not thread-safe; plans are created once per (size, sign)
// under a lock and executed through the new-array interface afterwards.
fftw_plan plan_for(int n, int sign) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, fftw_plan> cache;
    std::lock_guard lock(mu);
    auto key = std::make_pair(n, sign);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    std::vector<cplx> a(static_cast<size_t>(n)), b(static_cast<size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(key, p);
    return p;
}

std::vector<cplx> run(std::span<const cplx> in, int sign) {
    const int n = static_cast<int>(in.size());
    std::vector<cplx> src(in.begin(), in.end());
    std::vector<cplx> out(in.size());
    fftw_execute_dft(plan_for(n, sign), reinterpret_cast<fftw_complex*>(src.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

std::vector<cplx> forward(std::span<const cplx> in) {
    auto out = run(in, FFTW_FORWARD);
    const double s = 1.0 / static_cast<double>(in.size());
    for (auto& v : out) v *= s;
    return out;
}

std::vector<cplx> inverse(std::span<const cplx> in) { return run(in, FFTW_BACKWARD); }

std::vector<cplx> forward_real(std::span<const double> in) {
    std::vector<cplx> c(in.begin(), in.end());
    return forward(c);
}

std::vector<double> inverse_real(std::span<const cplx> in) {
    auto z = inverse(in);
    std::vector<double> out(z.size());
    std::transform(z.begin(), z.end(), out.begin(), [](cplx v) { return v.real(); });
    return out;
}

}  // namespace fft

SpectralField to_spectral(const RealField& f) { return {f.grid, fft::forward_real(f.values)}; }

RealField to_real(const SpectralField& s) { return {s.grid, fft::inverse_real(s.coefficients)}; }

namespace {

cplx ik_power(double kappa, int order) {
    cplx m(1.0, 0.0);
    for (int j = 0; j < order; ++j) m *= cplx(0.0, kappa);
    return m;
}

}  // namespace

RealField differentiate(const RealField& f, int order) {
    if (order < 1 || order > 6) throw std::invalid_argument("differentiate: order must be in 1..6");
    auto c = fft::forward_real(f.values);
    const int m = f.size();
    for (int s = 0; s < m; ++s) {
        const int k = wavenumber_of_slot(s, m);
        if (k == -m / 2 && order % 2 == 1) {
            c[static_cast<size_t>(s)] = 0.0;
            continue;
        }
        c[static_cast<size_t>(s)] *= ik_power(f.grid.frequency(k), order);
    }
    return {f.grid, fft::inverse_real(c)};
}

std::vector<cplx> differentiate_complex(const PeriodicGrid& grid, std::span<const cplx> values,
                                        int order, double shift) {
    auto c = fft::forward(values);
    const int m = grid.size();
    for (int s = 0; s < m; ++s) {
        const int k = wavenumber_of_slot(s, m);
        c[static_cast<size_t>(s)] *= ik_power(grid.frequency(k) + shift, order);
    }
    return fft::inverse(c);
}

double integral(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.grid.spacing();
}

double mean(const RealField& f) { return integral(f) / f.grid.length(); }

double inner(const RealField& f, const RealField& g) {
    if (!f.grid.same_as(g.grid)) throw std::invalid_argument("inner: grid mismatch");
    double s = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * g.values[i];
    return s * f.grid.spacing();
}

double norm_l1(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += std::abs(v);
    return s * f.grid.spacing();
}

double norm_l2(const RealField& f) { return std::sqrt(inner(f, f)); }

double norm_linf(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s = std::max(s, std::abs(v));
    return s;
}

double norm_hs(const RealField& f, int s) {
    auto c = fft::forward_real(f.values);
    const int m = f.size();
    double acc = 0.0;
    for (int slot = 0; slot < m; ++slot) {
        const double kap = f.grid.frequency(wavenumber_of_slot(slot, m));
        double w = 0.0, p = 1.0;
        for (int j = 0; j <= s; ++j) {
            w += p;
            p *= kap * kap;
        }
        acc += w * std::norm(c[static_cast<size_t>(slot)]);
    }
    return std::sqrt(acc * f.grid.length());
}

std::vector<double> interpolate(const RealField& f, std::span<const double> points) {
    const auto c = fft::forward_real(f.values);
    const int m = f.size();
    std::vector<double> out(points.size());
    for (size_t p = 0; p < points.size(); ++p) {
        const double w = kTwoPi * points[p] / f.grid.length();
        double acc = c[0].real();
        // Pair k and -k; the Nyquist term contributes its cosine part only.
        // Rotation recurrence, reseeded every 64 modes to keep the phase drift at roundoff.
        const cplx step = std::polar(1.0, w);
        cplx z = step;
        for (int k = 1; k < m / 2; ++k) {
            if (k % 64 == 0) z = std::polar(1.0, k * w);
            acc += 2.0 * (c[static_cast<size_t>(k)] * z).real();
            z *= step;
        }
        acc += (c[static_cast<size_t>(m / 2)] * std::cos(0.5 * m * w)).real();
        out[p] = acc;
    }
    return out;
}

RealField resample(const RealField& f, int num_points) {
    PeriodicGrid g(f.grid.length(), num_points);
    const auto c = fft::forward_real(f.values);
    const int m = f.size();
    std::vector<cplx> d(static_cast<size_t>(num_points), 0.0);
    const int kmax = std::min(m, num_points) / 2;
    for (int k = -kmax + 1; k < kmax; ++k)
        d[static_cast<size_t>(slot_of_wavenumber(k, num_points))] = c[static_cast<size_t>(slot_of_wavenumber(k, m))];
    if (num_points == m) d[static_cast<size_t>(m / 2)] = c[static_cast<size_t>(m / 2)];
    return {g, fft::inverse_real(d)};
}

RealField translate(const RealField& f, double shift) {
    auto c = fft::forward_real(f.values);
    const int m = f.size();
    for (int s = 0; s < m; ++s) {
        const int k = wavenumber_of_slot(s, m);
        if (k == -m / 2) {
            c[static_cast<size_t>(s)] *= std::cos(f.grid.frequency(k) * shift);
            continue;
        }
        c[static_cast<size_t>(s)] *= std::polar(1.0, -f.grid.frequency(k) * shift);
    }
    return {f.grid, fft::inverse_real(c)};
}

RealField tile(const RealField& f, int n) {
    if (n < 1) throw std::invalid_argument("tile: repetition count must be positive");
    PeriodicGrid g(f.grid.length() * n, f.size() * n);
    RealField out(g);
    for (int r = 0; r < n; ++r)
        std::copy(f.values.begin(), f.values.end(), out.values.begin() + static_cast<long>(r) * f.size());
    return out;
}

}  // namespace kdvks
