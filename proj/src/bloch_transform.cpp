#include "kdvks/bloch_transform.hpp"

#include <cmath>

namespace kdvks {

SubharmonicLattice::SubharmonicLattice(int n, double period) : n_(n), period_(period) {
    if (n < 1) throw std::invalid_argument("SubharmonicLattice: N must be positive");
    if (!(period > 0.0)) throw std::invalid_argument("SubharmonicLattice: period must be positive");
}

std::vector<double> SubharmonicLattice::frequencies() const {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(n_));
    for (int j = first_index(); j <= last_index(); ++j) out.push_back(frequency(j));
    return out;
}

int bloch_first_mode(int j, int cell_points) { return j >= 0 ? -cell_points / 2 : -cell_points / 2 + 1; }

std::vector<cplx> BlochDecomposition::coefficients(size_t s) const {
    const auto& smp = samples.at(s);
    const int p = cell_grid.size();
    auto c = fft::forward(smp.values);
    const int l0 = bloch_first_mode(smp.index, p);
    std::vector<cplx> b(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) {
        const int l = l0 + i;
        b[static_cast<size_t>(i)] = c[static_cast<size_t>(((l % p) + p) % p)];
    }
    return b;
}

BlochSample BlochDecomposition::from_coefficients(const SubharmonicLattice& lattice, const PeriodicGrid& cell,
                                                  int j, const std::vector<cplx>& b) {
    const int p = cell.size();
    if (static_cast<int>(b.size()) != p) throw std::invalid_argument("Bloch sample: coefficient count mismatch");
    const int l0 = bloch_first_mode(j, p);
    std::vector<cplx> c(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) c[static_cast<size_t>((((l0 + i) % p) + p) % p)] = b[static_cast<size_t>(i)];
    return {j, lattice.frequency(j), fft::inverse(c)};
}

namespace {

void check_grid(const PeriodicGrid& grid, const SubharmonicLattice& lattice) {
    const double want = lattice.n() * lattice.period();
    if (std::abs(grid.length() - want) > 1e-10 * want)
        throw std::invalid_argument("bloch_transform: grid length is not N*T");
    if (grid.size() % lattice.n() != 0)
        throw std::invalid_argument("bloch_transform: num_points not divisible by N");
}

}  // namespace

BlochDecomposition bloch_transform(const PeriodicGrid& grid, std::span<const cplx> values,
                                   const SubharmonicLattice& lattice) {
    check_grid(grid, lattice);
    const int m = grid.size();
    const int n = lattice.n();
    const int p = m / n;
    const double nt = grid.length();
    auto c = fft::forward(values);

    BlochDecomposition d{lattice, PeriodicGrid(lattice.period(), p), {}};
    d.samples.reserve(static_cast<size_t>(n));
    for (int j = lattice.first_index(); j <= lattice.last_index(); ++j) {
        const int l0 = bloch_first_mode(j, p);
        std::vector<cplx> b(static_cast<size_t>(p));
        for (int i = 0; i < p; ++i) {
            const int mode = j + n * (l0 + i);
            b[static_cast<size_t>(i)] = nt * c[static_cast<size_t>(slot_of_wavenumber(mode, m))];
        }
        d.samples.push_back(BlochDecomposition::from_coefficients(lattice, d.cell_grid, j, b));
    }
    return d;
}

BlochDecomposition bloch_transform(const RealField& g, const SubharmonicLattice& lattice) {
    std::vector<cplx> z(g.values.begin(), g.values.end());
    return bloch_transform(g.grid, z, lattice);
}

std::vector<cplx> inverse_bloch_complex(const BlochDecomposition& d) {
    const int n = d.lattice.n();
    const int p = d.cell_grid.size();
    if (static_cast<int>(d.samples.size()) != n)
        throw std::invalid_argument("inverse_bloch: sample count differs from N");
    for (const auto& s : d.samples)
        if (static_cast<int>(s.values.size()) != p)
            throw std::invalid_argument("inverse_bloch: inconsistent sample grids");
    const int m = n * p;
    const double nt = n * d.lattice.period();
    std::vector<cplx> c(static_cast<size_t>(m), 0.0);
    for (size_t s = 0; s < d.samples.size(); ++s) {
        const int j = d.samples[s].index;
        const auto b = d.coefficients(s);
        const int l0 = bloch_first_mode(j, p);
        for (int i = 0; i < p; ++i)
            c[static_cast<size_t>(slot_of_wavenumber(j + n * (l0 + i), m))] = b[static_cast<size_t>(i)] / nt;
    }
    return fft::inverse(c);
}

RealField inverse_bloch(const BlochDecomposition& d) {
    auto z = inverse_bloch_complex(d);
    PeriodicGrid g(d.lattice.n() * d.lattice.period(), static_cast<int>(z.size()));
    RealField out(g);
    for (size_t i = 0; i < z.size(); ++i) out.values[i] = z[i].real();
    return out;
}

namespace {

// <f,g>_{L^2(0,T)} for complex samples (conjugate-linear in f).
cplx cell_inner(const PeriodicGrid& cell, const std::vector<cplx>& f, const std::vector<cplx>& g) {
    cplx s = 0.0;
    for (size_t i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
    return s * cell.spacing();
}

IdentityReport make_report(double lhs, double rhs, double scale) {
    const double denom = std::max({std::abs(lhs), std::abs(rhs), scale, 1e-300});
    return {lhs, rhs, std::abs(lhs - rhs) / denom};
}

}  // namespace

IdentityReport check_parseval(const RealField& f, const RealField& g, const SubharmonicLattice& lattice) {
    if (!f.grid.same_as(g.grid)) throw std::invalid_argument("check_parseval: grid mismatch");
    const double lhs = inner(f, g);
    const auto bf = bloch_transform(f, lattice);
    const auto bg = bloch_transform(g, lattice);
    cplx acc = 0.0;
    for (size_t s = 0; s < bf.samples.size(); ++s)
        acc += cell_inner(bf.cell_grid, bf.samples[s].values, bg.samples[s].values);
    const double t = lattice.period();
    const double rhs = (acc / (lattice.n() * t * t)).real();
    return make_report(lhs, rhs, norm_l2(f) * norm_l2(g));
}

IdentityReport check_zero_mode_pairing(const RealField& f_cell, const RealField& g,
                                       const SubharmonicLattice& lattice) {
    const int n = lattice.n();
    if (std::abs(f_cell.grid.length() - lattice.period()) > 1e-10 * lattice.period() ||
        f_cell.size() * n != g.size())
        throw std::invalid_argument("check_zero_mode_pairing: grid mismatch");
    const double lhs = inner(tile(f_cell, n), g);
    const auto bg = bloch_transform(g, lattice);
    const size_t zero = static_cast<size_t>(-lattice.first_index());
    std::vector<cplx> fz(f_cell.values.begin(), f_cell.values.end());
    const double rhs = (cell_inner(bg.cell_grid, fz, bg.samples[zero].values) / lattice.period()).real();
    return make_report(lhs, rhs, norm_l2(tile(f_cell, n)) * norm_l2(g));
}

}  // namespace kdvks
