#include "kdvks/experiments.hpp"
#include "kdvks/io.hpp"
#include "kdvks/stability.hpp"

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace kdvks;

namespace {

py::array_t<double> to_numpy(const RealField& f) { return py::array_t<double>(f.values.size(), f.values.data()); }

RealField from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> a, double length) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
    return RealField(PeriodicGrid(length, static_cast<int>(a.size())), std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict verdict_dict(const StabilityVerdict& v) {
    py::dict d;
    d["verdict"] = to_string(v.verdict());
    d["d1"] = v.d1_ok;
    d["d2"] = v.d2_ok;
    d["d3"] = v.d3_ok;
    d["theta"] = v.theta;
    d["delta1"] = v.delta1;
    d["xi"] = v.xi_grid;
    d["max_real"] = v.max_real;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Periodic waves of the KdV-Kuramoto-Sivashinsky equation: profiles, Bloch spectra, simulation";
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<io::UsageError>(m, "UsageError", PyExc_ValueError);

    m.def("version", &io::version_string);

    py::class_<WaveProfile>(m, "Wave")
        .def_property_readonly("eps", [](const WaveProfile& w) { return w.params.epsilon; })
        .def_property_readonly("delta", [](const WaveProfile& w) { return w.params.delta; })
        .def_readonly("period", &WaveProfile::period)
        .def_readonly("speed", &WaveProfile::speed)
        .def_readonly("q", &WaveProfile::quad_const)
        .def_readonly("residual", &WaveProfile::residual_norm)
        .def_readonly("mean_zero", &WaveProfile::mean_zero)
        .def_property_readonly("profile", [](const WaveProfile& w) { return to_numpy(w.profile); })
        .def_property_readonly("x", [](const WaveProfile& w) {
            std::vector<double> x(w.profile.size());
            for (int i = 0; i < w.profile.size(); ++i) x[i] = w.grid().x(i);
            return py::array_t<double>(x.size(), x.data());
        })
        .def("__repr__", [](const WaveProfile& w) {
            return "<Wave eps=" + std::to_string(w.params.epsilon) + " T=" + std::to_string(w.period) +
                   " c=" + std::to_string(w.speed) + " points=" + std::to_string(w.profile.size()) + ">";
        });

    m.def("compute_wave", [](double eps, double period, int points) {
        return compute_wave(WaveParameters::from_epsilon(eps), period, points);
    }, py::arg("eps"), py::arg("period"), py::arg("points") = 128);
    m.def("galilean_boost", &galilean_boost, py::arg("wave"), py::arg("c_shift"));
    m.def("load_profile", &io::load_profile, py::arg("path"));
    m.def("save_profile", &io::save_profile, py::arg("dir"), py::arg("stem"), py::arg("wave"));

    m.def("read_field", [](const std::filesystem::path& p) {
        const auto f = io::read_field(p);
        return py::make_tuple(to_numpy(f), f.grid.length());
    }, py::arg("path"), "Returns (values, length).");
    m.def("write_field", [](const std::filesystem::path& p, py::array_t<double> v, double length) {
        io::write_field(p, from_numpy(v, length));
    }, py::arg("path"), py::arg("values"), py::arg("length"));

    m.def("symbol", [](double eps, double delta, double c, double kappa) {
        return constant_state_symbol({eps, delta}, c, kappa);
    }, py::arg("eps"), py::arg("delta"), py::arg("c"), py::arg("kappa"));
    m.def("bloch_eigenvalues", [](const WaveProfile& w, double xi, int modes) {
        const auto s = spectrum_slice(build_bloch_matrix(w, xi, modes));
        return std::vector<cplx>(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
    }, py::arg("wave"), py::arg("xi"), py::arg("modes") = 64);
    m.def("certify_stability", [](const WaveProfile& w, int xi_count, int modes) {
        return verdict_dict(certify_stability(w, xi_count, modes));
    }, py::arg("wave"), py::arg("xi_count") = 64, py::arg("modes") = 64);
    m.def("critical_expansion", [](const WaveProfile& w, int modes) {
        const auto cut = compute_cutoff(w, modes);
        const auto ce = critical_expansion(w, 0.5 * cut.xi1, 24, modes);
        py::list out;
        for (const auto& b : ce.branches) {
            py::dict d;
            d["a"] = b.a;
            d["d"] = b.d;
            d["e"] = b.e;
            out.append(d);
        }
        return py::make_tuple(out, cut.xi1);
    }, py::arg("wave"), py::arg("modes") = 64, "Returns ([{a, d, e} per branch], xi1).");
    m.def("gap_scan", &gap_scan, py::arg("wave"), py::arg("n_list"), py::arg("modes") = 64);
    m.def("lattice_sum", &lattice_sum, py::arg("omega"), py::arg("d"), py::arg("period"), py::arg("n"), py::arg("t"),
          py::arg("include_zero") = false);

    m.def("apply_semigroup", [](const WaveProfile& w, int n, double t, py::array_t<double> v, int modes) {
        return to_numpy(apply_semigroup(w, n, t, from_numpy(v, n * w.period), modes));
    }, py::arg("wave"), py::arg("n"), py::arg("t"), py::arg("v"), py::arg("modes") = 64,
       "e^{Lt} v for v sampled on n * modes points of [0, nT).");

    m.def("simulate", [](const WaveProfile& w, int n, const std::string& perturb, double dt, double tend,
                         int snapshots, int ppc) {
        const auto spec = io::parse_perturbation(perturb, n, ppc);
        const auto p = make_perturbation(spec, w);
        auto cfg = SimConfig::for_wave(w, n, ppc, dt, tend);
        cfg.snapshot_times = even_snapshot_times(tend, tend / snapshots, dt);
        Trajectory tr;
        {
            py::gil_scoped_release release;
            Simulator sim(cfg, p.u0);
            tr = sim.run(p.background);
        }
        py::array_t<double> u({static_cast<py::ssize_t>(tr.snapshots.size()), static_cast<py::ssize_t>(p.u0.size())});
        auto r = u.mutable_unchecked<2>();
        for (size_t k = 0; k < tr.snapshots.size(); ++k)
            for (int i = 0; i < p.u0.size(); ++i) r(k, i) = tr.snapshots[k][i];
        py::dict d;
        d["t"] = tr.t;
        d["u"] = u;
        d["mass"] = tr.mass;
        d["distance"] = tr.distance_to_family;
        d["shift"] = tr.best_shift;
        d["e0"] = p.e0;
        return d;
    }, py::arg("wave"), py::arg("n") = 1, py::arg("perturb") = "bump:amplitude=0.01", py::arg("dt") = 0.01,
       py::arg("tend") = 10.0, py::arg("snapshots") = 10, py::arg("ppc") = 128);
}
