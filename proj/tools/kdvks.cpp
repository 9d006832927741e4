// Command-line front end. Every subcommand reads its section of an optional
// JSON config (--config), applies flags on top and writes its outputs plus a
// manifest.json into --out.
#include "kdvks/experiments.hpp"
#include "kdvks/io.hpp"
#include "kdvks/parallel.hpp"
#include "kdvks/semigroup.hpp"
#include "kdvks/simulator.hpp"
#include "kdvks/stability.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>

using namespace kdvks;
using io::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct Run {
    std::string command;
    json cfg;
    fs::path out;
    io::RunManifest manifest;

    double num(const char* k) const { return cfg.at(k).get<double>(); }
    int integer(const char* k) const { return cfg.at(k).get<int>(); }
    bool flag(const char* k) const { return cfg.at(k).get<bool>(); }
    std::string str(const char* k) const { return cfg.at(k).get<std::string>(); }
    std::vector<double> list(const char* k) const {
        const auto& v = cfg.at(k);
        if (v.is_string()) return io::parse_list(v.get<std::string>());
        if (v.is_number()) return {v.get<double>()};
        return v.get<std::vector<double>>();
    }
    std::vector<int> int_list(const char* k) const {
        std::vector<int> out;
        for (double x : list(k)) {
            if (x != std::floor(x) || x < 1) throw io::UsageError(std::string(k) + ": expected positive integers");
            out.push_back(static_cast<int>(x));
        }
        return out;
    }
    WaveProfile profile() {
        const fs::path p = str("profile");
        auto w = io::load_profile(p);
        manifest.inputs[p.string()] = io::file_hash(p.extension() == ".bin" ? p : fs::path(p).replace_extension(".bin"));
        return w;
    }
};

std::vector<int> powers_of_two(int nmax) {
    if (nmax < 1) throw io::UsageError("nmax must be >= 1");
    std::vector<int> out;
    for (int n = 1; n <= nmax; n *= 2) out.push_back(n);
    return out;
}

json decay_fit_json(const DecayFit& f) {
    json j{{"norm", f.norm}, {"N", f.n}, {"exponent", f.exponent}, {"prefactor", f.prefactor},
           {"t_min", f.t_min}, {"t_max", f.t_max}, {"r_squared", f.r_squared}};
    if (!f.error.empty()) j["error"] = f.error;
    return j;
}

// ---------------------------------------------------------------- commands

void cmd_profile(Run& r) {
    const auto params = WaveParameters::from_epsilon(r.num("eps"));
    const double period = r.num("period");
    const int points = r.integer("points");
    WaveProfile w;
    if (const auto seed = r.str("seed"); !seed.empty()) {
        auto guess = io::read_field(seed);
        r.manifest.inputs[seed] = io::file_hash(seed);
        if (std::abs(guess.grid.length() - period) > 1e-9 * period)
            guess = RealField(PeriodicGrid(period, guess.size()), guess.values);
        w = solve_profile(params, period, resample(guess, points), 0.0);
    } else {
        w = compute_wave(params, period, points);
    }
    w = center_profile(w);
    io::save_profile(r.out, "profile", w);
    io::write_field_csv(r.out / "profile.csv", w.profile);
}

void cmd_continue(Run& r) {
    const auto params = WaveParameters::from_epsilon(r.num("eps"));
    const auto seed = compute_wave(params, r.num("from"), r.integer("points"));
    const auto branch = continue_in_period(seed, r.num("to"), r.num("step"));
    io::CsvWriter csv(r.out / "branch.csv", {"T", "c", "q", "amplitude", "residual", "newton_iterations", "step"});
    for (size_t i = 0; i < branch.profiles.size(); ++i) {
        const auto& w = branch.profiles[i];
        const auto& s = branch.steps[i];
        csv.row({w.period, w.speed, w.quad_const, w.amplitude(), w.residual_norm, static_cast<long long>(s.newton_iterations), s.step});
        if (r.flag("save_profiles")) io::save_profile(r.out / "profiles", "profile_" + std::to_string(i), w);
    }
    if (!branch.profiles.empty()) io::save_profile(r.out, "profile", branch.profiles.back());
    io::write_json(r.out / "summary.json", {{"aborted", branch.aborted}, {"stopped_at", branch.stopped_at},
                                            {"steps", branch.profiles.size()}});
    if (branch.aborted) std::cerr << "continue: step fell below minimum at T = " << branch.stopped_at << "\n";
}

void cmd_spectrum(Run& r) {
    const auto w = r.profile();
    const int count = r.integer("xi_count"), modes = r.integer("modes");
    const auto v = certify_stability(w, count, modes);
    io::CsvWriter csv(r.out / "spectrum.csv", {"xi", "re", "im"});
    for (double xi : v.xi_grid) {
        const auto s = spectrum_slice(build_bloch_matrix(w, xi, modes));
        for (int k = 0; k < s.eigenvalues.size(); ++k) csv.row({xi, s.eigenvalues(k).real(), s.eigenvalues(k).imag()});
    }
    json j{{"verdict", to_string(v.verdict())}, {"d1", v.d1_ok},          {"d2", v.d2_ok},
           {"d3", v.d3_ok},                     {"marginal", v.marginal}, {"theta", v.theta},
           {"delta1", v.delta1},                {"zero_count", v.zero_count}, {"kernel_gap_ratio", v.kernel_gap_ratio},
           {"profile", io::profile_metadata(w)}};
    if (v.verdict() == Verdict::stable) {
        const auto cut = compute_cutoff(w, modes);
        const auto ce = critical_expansion(w, 0.5 * cut.xi1, 24, modes);
        j["xi1"] = cut.xi1;
        for (int b = 0; b < 2; ++b)
            j["branches"].push_back({{"a", ce.branches[b].a}, {"d", ce.branches[b].d}, {"e", ce.branches[b].e},
                                     {"fit_residual", ce.branches[b].fit_residual}});
        j["nondegenerate"] = ce.nondegenerate;
    }
    io::write_json(r.out / "verdict.json", j);
}

void cmd_stabmap(Run& r) {
    StabilityMapOptions opts;
    opts.modes = r.integer("modes");
    opts.xi_count = r.integer("xi_count");
    opts.profile_points = r.integer("points");
    opts.workers = r.integer("workers") > 0 ? r.integer("workers") : default_workers();
    const auto map = stability_map(r.list("eps"), r.list("period"), opts);
    io::CsvWriter csv(r.out / "stabmap.csv", {"eps", "T", "verdict", "theta", "a1", "a2", "d1", "d2", "nondegenerate", "note"});
    json cells = json::array();
    for (const auto& c : map.cells) {
        csv.row({c.epsilon, c.period, to_string(c.verdict), c.theta, c.a1, c.a2, c.d1, c.d2,
                 static_cast<long long>(c.nondegenerate), c.note});
        cells.push_back({{"eps", c.epsilon}, {"T", c.period}, {"verdict", to_string(c.verdict)}});
    }
    io::CsvWriter b(r.out / "boundaries.csv", {"eps", "T", "below", "above"});
    for (const auto& x : map.boundaries) b.row({x.epsilon, x.period, to_string(x.below), to_string(x.above)});
    io::write_json(r.out / "verdicts.json", {{"cells", cells}});
}

void cmd_semigroup(Run& r) {
    const auto w = r.profile();
    const int n = r.integer("n"), modes = r.integer("modes");
    const auto ctx = prepare_semigroup(w, n, modes);
    RealField v;
    if (const auto in = r.str("input"); !in.empty()) {
        v = io::read_field(in);
        r.manifest.inputs[in] = io::file_hash(in);
        if (std::abs(v.grid.length() - ctx.grid().length()) > 1e-9 * ctx.grid().length())
            throw io::UsageError("input field is not NT-periodic for N = " + std::to_string(n));
        v = resample(v, ctx.grid().size());
    } else {
        PerturbationSpec spec;
        spec.n = n;
        spec.points_per_cell = modes;
        spec.amplitude = 1.0;
        v = make_perturbation(spec, w).perturbation;
        v *= 1.0 / norm_l1(v);
    }
    auto times = r.list("t");
    std::sort(times.begin(), times.end());
    io::CsvWriter csv(r.out / "pieces.csv", {"t", "piece", "l2", "linf"});
    for (double t : times) {
        if (r.flag("decompose")) {
            const auto p = decompose_semigroup(ctx, t, v);
            const std::pair<const char*, const RealField*> named[] = {
                {"hf", &p.hf}, {"lf_residual", &p.lf_residual}, {"mean_boost", &p.mean_boost},
                {"phase", &p.phase}, {"critical_residual", &p.critical_residual}, {"total", &p.total}};
            for (const auto& [name, f] : named) csv.row({t, std::string(name), norm_l2(*f), norm_linf(*f)});
        } else {
            const auto u = apply_semigroup(ctx, t, v);
            csv.row({t, std::string("total"), norm_l2(u), norm_linf(u)});
        }
    }
    std::vector<DecayRequest> req = {{LinearQuantity::remainder, 0, NormKind::l2},
                                     {LinearQuantity::remainder_dx_input, 0, NormKind::l2},
                                     {LinearQuantity::phase, 0, NormKind::linf},
                                     {LinearQuantity::phase_dx_input, 0, NormKind::linf}};
    const auto ms = measure_linear_decay(ctx, times, v, req);
    io::CsvWriter dc(r.out / "decay.csv", {"t", "quantity", "ell", "norm", "value"});
    json fits = json::array();
    for (const auto& m : ms) {
        for (size_t k = 0; k < m.t.size(); ++k)
            dc.row({m.t[k], to_string(m.request.quantity), static_cast<long long>(m.request.ell), to_string(m.request.norm), m.value[k]});
        json f{{"quantity", to_string(m.request.quantity)}, {"ell", m.request.ell}, {"norm", to_string(m.request.norm)},
               {"exponent", m.exponent_fit}, {"predicted", predicted_exponent(m.request)}, {"r_squared", m.r_squared},
               {"t_min", m.t_min}, {"t_max", m.t_max}};
        if (!m.error.empty()) f["error"] = m.error;
        fits.push_back(f);
    }
    io::write_json(r.out / "summary.json", {{"N", n}, {"modes", modes}, {"xi1", ctx.cutoff.xi1}, {"fits", fits}});
}

void cmd_lemma(Run& r) {
    const int omega = r.integer("omega");
    const double d = r.num("d"), tmax = r.num("tmax");
    const int tp = r.integer("t_points");
    if (tp < 2 || !(tmax > 0.0)) throw io::UsageError("lemma-a1: need t_points >= 2 and tmax > 0");
    std::vector<double> ts{0.0};
    for (int k = 1; k < tp; ++k) ts.push_back(std::pow(1.0 + tmax, static_cast<double>(k) / (tp - 1)) - 1.0);
    const auto ns = powers_of_two(r.integer("nmax"));
    const auto rep = discrete_sum_bound(omega, d, r.num("period"), ns, ts);
    io::CsvWriter csv(r.out / "lemma_a1.csv", {"N", "t", "value", "scaled"});
    for (size_t i = 0; i < ns.size(); ++i)
        for (size_t k = 0; k < ts.size(); ++k)
            csv.row({static_cast<long long>(ns[i]), ts[k], rep.value[i][k],
                     rep.value[i][k] * std::pow(1.0 + ts[k], omega + 0.5)});
    io::write_json(r.out / "summary.json", {{"omega", omega}, {"d", d}, {"N", ns}, {"scaled_sup", rep.scaled_sup},
                                            {"sup_all", rep.sup_all}, {"doubling_change", rep.doubling_change}});
}

void cmd_gaps(Run& r) {
    const auto w = r.profile();
    const int modes = r.integer("modes");
    const auto ns = powers_of_two(r.integer("nmax"));
    const auto gaps = gap_scan(w, ns, modes);
    io::CsvWriter csv(r.out / "gaps.csv", {"N", "delta_N", "N2_delta_N"});
    for (const auto& [n, g] : gaps) csv.row({static_cast<long long>(n), g, g * n * n});
    const auto cut = compute_cutoff(w, modes);
    const auto ce = critical_expansion(w, 0.5 * cut.xi1, 24, modes);
    const double k0 = kTwoPi / w.period;
    const double limit = k0 * k0 * std::min(ce.branches[0].d, ce.branches[1].d);
    io::write_json(r.out / "summary.json", {{"limit", limit}, {"d", {ce.branches[0].d, ce.branches[1].d}},
                                            {"last_ratio", gaps.rbegin()->second * gaps.rbegin()->first * gaps.rbegin()->first / limit}});
}

void cmd_simulate(Run& r) {
    const auto w = r.profile();
    const int n = r.integer("n"), ppc = r.integer("ppc"), count = r.integer("snapshots");
    const double dt = r.num("dt"), tend = r.num("tend");
    if (count < 1) throw io::UsageError("snapshots must be >= 1");
    const auto spec = io::parse_perturbation(r.str("perturb"), n, ppc);
    r.manifest.seeds.push_back(spec.seed);
    const auto p = make_perturbation(spec, w);
    auto cfg = SimConfig::for_wave(w, n, ppc, dt, tend);
    cfg.snapshot_times = even_snapshot_times(tend, tend / count, dt);
    Simulator sim(cfg, p.u0);
    const auto tr = sim.run(p.background);
    io::CsvWriter csv(r.out / "diagnostics.csv", {"t", "mass", "energy", "distance", "shift"});
    for (size_t k = 0; k < tr.t.size(); ++k) {
        csv.row({tr.t[k], tr.mass[k], tr.energy[k], tr.distance_to_family[k], tr.best_shift[k]});
        char name[32];
        std::snprintf(name, sizeof name, "u_%04zu.bin", k);
        io::write_field(r.out / "snapshots" / name, tr.snapshots[k]);
    }
    io::write_json(r.out / "summary.json", {{"N", n}, {"e0", p.e0}, {"delta_m", p.delta_m}, {"amplitude", p.amplitude},
                                            {"mass_drift", check_mass(tr).max_drift}});
}

void cmd_fixed_n(Run& r) {
    const auto w = r.profile();
    const int ppc = r.integer("ppc"), modes = r.integer("modes");
    const double dt = r.num("dt");
    json runs = json::array();
    for (int n : r.int_list("n")) {
        const double tend = r.num("tend") > 0.0 ? r.num("tend") : 60.0 * n * n;
        const double gap = gap_scan(w, {n}, modes).at(n);
        const auto spec = io::parse_perturbation(r.str("perturb"), n, ppc);
        r.manifest.seeds.push_back(spec.seed);
        const auto p = make_perturbation(spec, w);
        auto cfg = SimConfig::for_wave(w, n, ppc, dt, tend);
        cfg.snapshot_times = even_snapshot_times(tend, r.num("snapshot_dt"), dt);
        Simulator sim(cfg, p.u0);
        const auto rep = fit_fixedN_decay(sim.run(), w, n, gap, r.num("t_fit_min"));
        io::CsvWriter csv(r.out / ("series_N" + std::to_string(n) + ".csv"), {"t", "distance", "shift"});
        for (size_t k = 0; k < rep.t.size(); ++k) csv.row({rep.t[k], rep.distance[k], rep.shift[k]});
        runs.push_back({{"N", n}, {"gap", gap}, {"rate", rep.fit.exponent}, {"rate_ratio", rep.rate_ratio},
                        {"fit", decay_fit_json(rep.fit)}, {"shift_limit", rep.shift_limit},
                        {"shift_change", rep.shift_change}, {"e0", p.e0}});
    }
    io::write_json(r.out / "summary.json", {{"runs", runs}});
}

void cmd_uniform(Run& r) {
    const auto w = r.profile();
    const int ppc = r.integer("ppc");
    const double dt = r.num("dt"), tend = r.num("tend");
    const auto ns = r.int_list("n");
    std::vector<std::pair<int, Trajectory>> trajs(ns.size());
    std::vector<double> e0(ns.size());
    std::vector<PerturbationSpec> specs;
    for (int n : ns) {
        auto spec = io::parse_perturbation(r.str("perturb"), n, ppc);
        spec.target_e0 = r.num("e0");
        r.manifest.seeds.push_back(spec.seed);
        specs.push_back(spec);
    }
    parallel_for(ns.size(), default_workers(), [&](size_t i) {
        const auto p = make_perturbation(specs[i], w);
        auto cfg = SimConfig::for_wave(w, ns[i], ppc, dt, tend);
        cfg.snapshot_times = log_snapshot_times(tend, r.integer("snapshots"), dt);
        Simulator sim(cfg, p.u0);
        trajs[i] = {ns[i], sim.run()};
        e0[i] = p.e0;
    });
    const auto rep = fit_uniform_decay(trajs, e0, w, {}, r.num("t_fit_min"));
    json runs = json::array();
    for (const auto& u : rep.runs) {
        const auto& m = u.modulation;
        io::CsvWriter csv(r.out / ("series_N" + std::to_string(u.n) + ".csv"),
                          {"t", "residual", "psi_inf", "zeta", "grad_psi", "unmodulated", "gamma", "residual_h1"});
        for (size_t k = 0; k < m.t.size(); ++k)
            csv.row({m.t[k], m.residual_l2[k], m.psi_inf[k], u.zeta[k], m.grad_psi[k], m.unmodulated_l2[k], m.gamma[k], m.residual_h1[k]});
        json j{{"N", u.n}, {"e0", u.e0}, {"residual_fit", decay_fit_json(u.residual_fit)}, {"h1_fit", decay_fit_json(u.h1_fit)},
               {"grad_fit", decay_fit_json(u.grad_fit)}, {"zeta_sup", u.zeta_sup}, {"psi_constant", u.psi_constant},
               {"stalled", m.stalled.size()}, {"xi_cut", m.xi_cut}};
        if (m.gamma_inf) j["gamma_inf"] = *m.gamma_inf;
        runs.push_back(j);
    }
    io::write_json(r.out / "summary.json", {{"runs", runs}, {"zeta_spread", rep.zeta_spread}, {"psi_spread", rep.psi_spread},
                                            {"prefactor_spread", rep.prefactor_spread}});
}

void cmd_residual(Run& r) {
    const auto w = r.profile();
    const int n = r.integer("n"), ppc = r.integer("ppc");
    const double dt = r.num("dt"), tmid = r.num("t"), h = r.num("spacing");
    const long stride = std::lround(h / dt);
    if (stride < 1 || std::abs(stride * dt - h) > 1e-9 * dt) throw io::UsageError("spacing must be a multiple of dt");
    const long mid = std::lround(tmid / dt);
    if (mid < 2 * stride) throw io::UsageError("t must leave room for two slices before it");
    const auto spec = io::parse_perturbation(r.str("perturb"), n, ppc);
    r.manifest.seeds.push_back(spec.seed);
    const auto p = make_perturbation(spec, w);
    auto cfg = SimConfig::for_wave(w, n, ppc, dt, (mid + 2 * stride) * dt);
    cfg.snapshot_times.push_back(0.0);
    for (int k = -2; k <= 2; ++k) cfg.snapshot_times.push_back((mid + k * stride) * dt);
    Simulator sim(cfg, p.u0);
    const auto tr = sim.run();
    std::vector<double> t(tr.t.begin() + 1, tr.t.end()), gamma(5, 0.0);
    std::vector<RealField> v, psi;
    if (r.flag("modulated")) {
        const auto fit = extract_modulation(tr, w, n, ModulationMode::variational);
        v.assign(fit.v.begin() + 1, fit.v.end());
        psi.assign(fit.psi.begin() + 1, fit.psi.end());
        gamma.assign(fit.gamma.begin() + 1, fit.gamma.end());
    } else {
        for (size_t k = 1; k < tr.snapshots.size(); ++k) {
            v.push_back(tr.snapshots[k] - p.background);
            psi.emplace_back(tr.snapshots[k].grid);
        }
    }
    const auto rep = evaluate_perturbation_residual(t, v, psi, gamma, w, n);
    io::write_json(r.out / "residual.json",
                   {{"t", rep.t}, {"lhs_l2", rep.lhs_l2}, {"imbalance_l2", rep.imbalance_l2}, {"imbalance_rel", rep.imbalance_rel},
                    {"q_l2", rep.q_l2}, {"r_l2", rep.r_l2}, {"l_psi_v_l2", rep.l_psi_v_l2}, {"dual_mismatch", rep.dual_mismatch},
                    {"modulated", r.flag("modulated")}, {"N", n}});
}

// ---------------------------------------------------------------- plumbing

struct Command {
    std::string section;
    std::function<void(Run&)> body;
    std::string help;
};

const std::vector<Command>& commands() {
    static const std::vector<Command> list = {
        {"profile", cmd_profile, "compute a periodic traveling wave"},
        {"continue", cmd_continue, "continue a wave in the period"},
        {"spectrum", cmd_spectrum, "Bloch spectrum and stability verdict of a profile"},
        {"stabmap", cmd_stabmap, "stability verdicts on an (eps, T) grid"},
        {"semigroup", cmd_semigroup, "linear NT-periodic evolution and its pieces"},
        {"lemma-a1", cmd_lemma, "discrete Gaussian lattice sums"},
        {"gaps", cmd_gaps, "subharmonic spectral gaps"},
        {"simulate", cmd_simulate, "nonlinear simulation of a perturbed wave"},
        {"experiment/fixed-n", cmd_fixed_n, "exponential decay at fixed N"},
        {"experiment/uniform", cmd_uniform, "modulated decay across N"},
        {"experiment/residual", cmd_residual, "closure of the modulated perturbation equation"},
    };
    return list;
}

std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

json wrap_section(const std::string& section, const json& cfg) {
    const auto slash = section.find('/');
    if (slash == std::string::npos) return json{{section, cfg}};
    return json{{section.substr(0, slash), {{section.substr(slash + 1), cfg}}}};
}

json flag_value(const io::KeySpec& k, const std::string& raw) {
    try {
        size_t pos = 0;
        switch (k.type) {
            case io::KeyType::number: {
                const double v = std::stod(raw, &pos);
                if (pos != raw.size()) break;
                return v;
            }
            case io::KeyType::integer: {
                const long long v = std::stoll(raw, &pos);
                if (pos != raw.size()) break;
                return v;
            }
            case io::KeyType::boolean:
                if (raw.empty() || raw == "true" || raw == "1") return true;
                if (raw == "false" || raw == "0") return false;
                break;
            case io::KeyType::string:
            case io::KeyType::list: return raw;
        }
    } catch (const std::exception&) {
    }
    throw io::UsageError("--" + dashed(k.name) + ": cannot parse '" + raw + "'");
}

void write_failure(const fs::path& out, const std::string& command, const std::string& what) {
    const json payload{{"command", command}, {"error", "numerical"}, {"message", what}};
    std::cerr << payload.dump() << "\n";
    if (!out.empty() && fs::is_directory(out)) io::write_json(out / "failure.json", payload);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KdV-KS periodic wave workbench"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", io::version_string());
    std::string config_path;
    app.add_option("--config", config_path, "JSON config with one section per command (a manifest also works)");

    struct Bound {
        CLI::App* app;
        const Command* cmd;
        std::map<std::string, std::string> raw;
    };
    std::vector<std::unique_ptr<Bound>> bound;
    std::map<std::string, CLI::App*> groups;
    for (const auto& c : commands()) {
        CLI::App* parent = &app;
        std::string name = c.section;
        if (const auto slash = name.find('/'); slash != std::string::npos) {
            const auto g = name.substr(0, slash);
            if (!groups.count(g)) {
                groups[g] = app.add_subcommand(g, "experiments (fixed-n, uniform, residual)");
                groups[g]->require_subcommand(1);
                groups[g]->fallthrough();
            }
            parent = groups[g];
            name = name.substr(slash + 1);
        }
        auto b = std::make_unique<Bound>();
        b->cmd = &c;
        b->app = parent->add_subcommand(name, c.help);
        for (const auto& k : io::config_schema().at(c.section)) {
            std::string doc = k.doc;
            if (!k.fallback.is_null()) doc += " [default " + (k.fallback.is_string() ? k.fallback.get<std::string>() : k.fallback.dump()) + "]";
            else doc += " [required]";
            auto* opt = b->app->add_option("--" + dashed(k.name), b->raw[k.name], doc);
            if (k.type == io::KeyType::boolean) opt->expected(0, 1);
        }
        bound.push_back(std::move(b));
    }
    auto* report = app.add_subcommand("report", "bundle a finished run for plotting");
    std::string report_run, report_out;
    report->add_option("--run", report_run, "finished run directory")->required();
    report->add_option("--out", report_out, "bundle directory [default <run>/bundle]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    if (report->parsed()) {
        try {
            const auto res = io::export_report(report_run, report_out);
            std::cout << res.bundle.string() << " (" << res.kind << ", " << res.files.size() << " files)\n";
            return 0;
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kExitUsage;
        }
    }

    Bound* chosen = nullptr;
    for (auto& b : bound)
        if (b->app->parsed()) chosen = b.get();
    if (!chosen) return kExitUsage;
    const auto& cmd = *chosen->cmd;

    Run run;
    run.command = cmd.section;
    try {
        json file = json::object();
        if (!config_path.empty()) {
            file = io::read_json(config_path);
            io::validate_config(file);
            if (file.contains("manifest_version") && file.value("command", "") != cmd.section)
                throw io::UsageError("manifest was written by '" + file.value("command", "") + "', not '" + cmd.section + "'");
        }
        json flags = json::object();
        for (const auto& k : io::config_schema().at(cmd.section))
            if (chosen->app->get_option("--" + dashed(k.name))->count() > 0) flags[k.name] = flag_value(k, chosen->raw[k.name]);
        run.cfg = io::resolve_config(cmd.section, io::config_section(file, cmd.section), flags);
    } catch (const std::exception& e) {
        std::cerr << cmd.section << ": " << e.what() << "\n";
        return kExitUsage;
    }

    run.out = run.cfg.at("out").get<std::string>();
    run.manifest.command = cmd.section;
    run.manifest.config = wrap_section(cmd.section, run.cfg);
    const auto t0 = std::chrono::steady_clock::now();
    // Usage errors found inside a command leave nothing behind we created.
    const bool fresh = !fs::exists(run.out);
    auto usage = [&](const std::exception& e) {
        std::cerr << cmd.section << ": " << e.what() << "\n";
        if (fresh) fs::remove_all(run.out);
        return kExitUsage;
    };
    try {
        fs::create_directories(run.out);
        cmd.body(run);
    } catch (const io::UsageError& e) {
        return usage(e);
    } catch (const std::invalid_argument& e) {
        return usage(e);
    } catch (const NumericalError& e) {
        write_failure(run.out, cmd.section, e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        write_failure(run.out, cmd.section, e.what());
        return kExitNumerical;
    }
    run.manifest.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    io::write_manifest(run.out, run.manifest);
    std::cout << run.out.string() << "\n";
    return 0;
}
