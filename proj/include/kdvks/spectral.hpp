#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kdvks {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Raised when a numerical procedure fails to deliver a trustworthy result
/// (Newton divergence, eigensolver breakdown, blow-up, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform grid on [0, length) with an even number of points.
class PeriodicGrid {
public:
    PeriodicGrid() = default;
    PeriodicGrid(double length, int num_points);

    double length() const { return length_; }
    int size() const { return num_points_; }
    double spacing() const { return length_ / num_points_; }
    double x(int k) const { return k * spacing(); }
    /// Physical frequency of integer wavenumber k.
    double frequency(int k) const { return kTwoPi * k / length_; }

    bool same_as(const PeriodicGrid& other, double rel_tol = 1e-12) const;

private:
    double length_ = kTwoPi;
    int num_points_ = 16;
};

/// Integer wavenumber stored at FFT slot `slot` of an M-point transform;
/// wavenumbers run over [-M/2, M/2).
inline int wavenumber_of_slot(int slot, int m) { return slot < m / 2 ? slot : slot - m; }
inline int slot_of_wavenumber(int k, int m) { return k >= 0 ? k : k + m; }

struct RealField {
    PeriodicGrid grid;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(PeriodicGrid g) : grid(g), values(static_cast<size_t>(g.size()), 0.0) {}
    RealField(PeriodicGrid g, std::vector<double> v);

    template <class F>
    static RealField sample(PeriodicGrid g, F&& f) {
        RealField out(g);
        for (int k = 0; k < g.size(); ++k) out.values[static_cast<size_t>(k)] = f(g.x(k));
        return out;
    }

    int size() const { return grid.size(); }
    double operator[](int k) const { return values[static_cast<size_t>(k)]; }
    double& operator[](int k) { return values[static_cast<size_t>(k)]; }

    RealField& operator+=(const RealField& o);
    RealField& operator-=(const RealField& o);
    RealField& operator*=(double s);
};

RealField operator+(RealField a, const RealField& b);
RealField operator-(RealField a, const RealField& b);
RealField operator*(double s, RealField a);

/// Trigonometric coefficients c_k with g(x) = sum_k c_k exp(2 pi i k x / length),
/// stored in FFT order (use `at(k)` for wavenumber access).
struct SpectralField {
    PeriodicGrid grid;
    std::vector<cplx> coefficients;

    cplx at(int k) const { return coefficients[static_cast<size_t>(slot_of_wavenumber(k, grid.size()))]; }
    cplx& at(int k) { return coefficients[static_cast<size_t>(slot_of_wavenumber(k, grid.size()))]; }
};

namespace fft {
/// Normalized forward transform: out_k = (1/M) sum_j in_j exp(-2 pi i j k / M).
std::vector<cplx> forward(std::span<const cplx> in);
/// Unnormalized inverse: out_j = sum_k in_k exp(2 pi i j k / M).
std::vector<cplx> inverse(std::span<const cplx> in);
std::vector<cplx> forward_real(std::span<const double> in);
/// Inverse transform keeping only the real part.
std::vector<double> inverse_real(std::span<const cplx> in);
}  // namespace fft

SpectralField to_spectral(const RealField& f);
RealField to_real(const SpectralField& s);

/// Exact derivative of the trigonometric interpolant. The Nyquist mode is
/// dropped for odd orders so that real data stays real.
RealField differentiate(const RealField& f, int order);

/// Spectral multiplier helper: applies (i*kappa)^order in Fourier space to
/// complex samples on `grid`, with kappa = frequency(k) + shift.
std::vector<cplx> differentiate_complex(const PeriodicGrid& grid, std::span<const cplx> values,
                                        int order, double shift = 0.0);

/// Mean value (1/length) * integral.
double mean(const RealField& f);
/// Trapezoidal integral over one period (exact for trigonometric polynomials).
double integral(const RealField& f);
double inner(const RealField& f, const RealField& g);
double norm_l1(const RealField& f);
double norm_l2(const RealField& f);
double norm_linf(const RealField& f);
/// H^s norm: sqrt(sum_{j<=s} ||d^j f||_{L2}^2), evaluated spectrally.
double norm_hs(const RealField& f, int s);

/// Evaluates the trigonometric interpolant of f at arbitrary points.
std::vector<double> interpolate(const RealField& f, std::span<const double> points);

/// Re-samples a band-limited field on a grid of the same length but a
/// different resolution (zero-pad or truncate in Fourier space).
RealField resample(const RealField& f, int num_points);

/// Translates a field by `shift` (f(x - shift)) exactly in Fourier space.
RealField translate(const RealField& f, double shift);

/// Repeats a T-periodic field n times to obtain an nT-periodic field.
RealField tile(const RealField& f, int n);

}  // namespace kdvks
