#include "kdvks/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

#ifndef KDVKS_VERSION
#define KDVKS_VERSION "unknown"
#endif
#ifndef KDVKS_GIT_REV
#define KDVKS_GIT_REV ""
#endif

namespace kdvks::io {

std::string version_string() {
    std::string v = KDVKS_VERSION;
    const std::string rev = KDVKS_GIT_REV;
    if (!rev.empty()) v += "+" + rev;
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
    ensure_parent(p);
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
    return r;
}

}  // namespace

void write_field(const fs::path& path, const RealField& f) {
    auto out = open_out(path, true);
    json h{{"length", f.grid.length()}, {"num_points", f.size()}};
    out << h.dump() << '\n';
    for (double x : f.values) {
        const auto b = to_le(std::bit_cast<std::uint64_t>(x));
        out.write(reinterpret_cast<const char*>(&b), sizeof b);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

RealField read_field(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open field file " + path.string());
    std::string line;
    std::getline(in, line);
    json h;
    try {
        h = json::parse(line);
    } catch (const json::exception& e) {
        throw UsageError(path.string() + ": bad field header (" + e.what() + ")");
    }
    if (!h.contains("length") || !h.contains("num_points")) throw UsageError(path.string() + ": header lacks length/num_points");
    const double len = h["length"].get<double>();
    const int m = h["num_points"].get<int>();
    if (!(len > 0.0) || m < 2 || m % 2) throw UsageError(path.string() + ": invalid grid in header");
    std::vector<double> v(static_cast<size_t>(m));
    for (auto& x : v) {
        std::uint64_t b = 0;
        in.read(reinterpret_cast<char*>(&b), sizeof b);
        if (!in) throw UsageError(path.string() + ": truncated field data");
        x = std::bit_cast<double>(to_le(b));
    }
    return RealField(PeriodicGrid(len, m), std::move(v));
}

void write_field_csv(const fs::path& path, const RealField& f) {
    CsvWriter w(path, {"x", "value"});
    for (int k = 0; k < f.size(); ++k) w.row({f.grid.x(k), f[k]});
}

CsvWriter::CsvWriter(const fs::path& path, std::vector<std::string> columns)
    : out_(open_out(path)), columns_(std::move(columns)) {
    for (size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CsvWriter: row width does not match header");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, double>)
                    out_ << format_double(c);
                else
                    out_ << c;
            },
            cells[i]);
    }
    out_ << '\n';
}

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw UsageError("csv: no column " + name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stod(r[static_cast<size_t>(c)]));
    return out;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!line.empty() && line.back() == ',') out.emplace_back();
        return out;
    };
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw UsageError(path.string() + ": empty csv");
    t.columns = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto r = split(line);
        if (r.size() != t.columns.size()) throw UsageError(path.string() + ": ragged row");
        t.rows.push_back(std::move(r));
    }
    return t;
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

json profile_metadata(const WaveProfile& w) {
    return json{{"eps", w.params.epsilon}, {"delta", w.params.delta}, {"T", w.period},
                {"c", w.speed},           {"q", w.quad_const},      {"residual", w.residual_norm},
                {"num_points", w.profile.size()}, {"mean_zero", w.mean_zero}};
}

void save_profile(const fs::path& dir, const std::string& stem, const WaveProfile& w) {
    auto meta = profile_metadata(w);
    meta["field"] = stem + ".bin";
    write_field(dir / (stem + ".bin"), w.profile);
    write_json(dir / (stem + ".json"), meta);
}

WaveProfile load_profile(const fs::path& path) {
    fs::path meta_path = path;
    if (path.extension() == ".bin") meta_path.replace_extension(".json");
    const auto meta = read_json(meta_path);
    for (const char* k : {"eps", "delta", "T", "c", "q"})
        if (!meta.contains(k)) throw UsageError(meta_path.string() + ": profile metadata lacks '" + k + "'");
    const fs::path field = meta_path.parent_path() / meta.value("field", meta_path.stem().string() + ".bin");
    WaveProfile w;
    w.params.epsilon = meta["eps"].get<double>();
    w.params.delta = meta["delta"].get<double>();
    w.period = meta["T"].get<double>();
    w.speed = meta["c"].get<double>();
    w.quad_const = meta["q"].get<double>();
    w.residual_norm = meta.value("residual", 0.0);
    w.mean_zero = meta.value("mean_zero", true);
    w.profile = read_field(field);
    if (std::abs(w.profile.grid.length() - w.period) > 1e-12 * w.period)
        throw UsageError(field.string() + ": grid length does not match T");
    return w;
}

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot hash " + path.string());
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

json RunManifest::to_json() const {
    json outs = json::array();
    for (const auto& [p, h] : outputs) outs.push_back({{"path", p}, {"hash", h}});
    return json{{"manifest_version", 1}, {"command", command}, {"config", config}, {"version", version},
                {"inputs", inputs}, {"outputs", outs}, {"wall_clock", wall_clock}, {"seeds", seeds}};
}

RunManifest RunManifest::from_json(const json& j) {
    if (!j.contains("manifest_version") || !j.contains("command")) throw UsageError("not a run manifest");
    RunManifest m;
    m.command = j["command"].get<std::string>();
    m.config = j.value("config", json::object());
    m.version = j.value("version", "");
    if (j.contains("inputs")) m.inputs = j["inputs"].get<std::map<std::string, std::string>>();
    for (const auto& o : j.value("outputs", json::array()))
        m.outputs.emplace_back(o.at("path").get<std::string>(), o.at("hash").get<std::string>());
    m.wall_clock = j.value("wall_clock", 0.0);
    if (j.contains("seeds")) m.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    return m;
}

void write_manifest(const fs::path& dir, RunManifest m) {
    m.version = version_string();
    m.outputs.clear();
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) m.outputs.emplace_back(fs::relative(f, dir).generic_string(), file_hash(f));
    write_json(dir / "manifest.json", m.to_json());
}

// ---------------------------------------------------------------- config

const ConfigSchema& config_schema() {
    using K = KeyType;
    static const ConfigSchema schema = [] {
        const json req;  // required
        ConfigSchema s;
        const KeySpec out{"out", K::string, req, "output directory"};
        const KeySpec profile{"profile", K::string, req, "profile metadata (.json) or field (.bin)"};
        const KeySpec eps{"eps", K::number, 0.0, "dispersion eps in [-1, 1]; delta = sqrt(1 - eps^2) (dimensionless)"};
        const KeySpec points{"points", K::integer, 128, "collocation points per period"};
        const KeySpec modes{"modes", K::integer, 64, "Fourier modes of the Bloch truncation"};
        const KeySpec ppc{"ppc", K::integer, 128, "simulation points per period T"};
        s["profile"] = {eps,
                        {"period", K::number, 7.85, "period T (length units of x)"},
                        points,
                        {"seed", K::string, "", "initial guess field; empty uses the bifurcation seed"},
                        out};
        s["continue"] = {eps,
                         {"from", K::number, req, "start period T0"},
                         {"to", K::number, req, "target period T1"},
                         {"step", K::number, 0.1, "initial period step"},
                         points,
                         {"save_profiles", K::boolean, false, "write every profile on the branch"},
                         out};
        s["spectrum"] = {profile, {"xi_count", K::integer, 64, "Bloch samples on [-pi/T, pi/T)"}, modes, out};
        s["stabmap"] = {{"eps", K::list, "0", "eps grid, a:b:n or comma list"},
                        {"period", K::list, req, "period grid, a:b:n or comma list"},
                        modes,
                        {"xi_count", K::integer, 64, "Bloch samples per cell"},
                        points,
                        {"workers", K::integer, 0, "threads; 0 reads KDVKS_WORKERS"},
                        out};
        s["semigroup"] = {profile,
                          {"n", K::integer, 2, "subharmonic multiple N"},
                          {"t", K::list, "0.1,1,10,100", "output times (time units)"},
                          {"input", K::string, "", "NT-periodic input field; empty uses a Gaussian bump"},
                          modes,
                          {"decompose", K::boolean, false, "also write the five pieces"},
                          out};
        s["lemma-a1"] = {{"omega", K::integer, 0, "power of xi"},
                         {"d", K::number, 1.0, "diffusivity (length^2 / time)"},
                         {"nmax", K::integer, 64, "largest N (powers of two from 1)"},
                         {"period", K::number, 7.85, "period T"},
                         {"tmax", K::number, 1e4, "largest time"},
                         {"t_points", K::integer, 200, "log-spaced times in [0, tmax]"},
                         out};
        s["gaps"] = {profile, {"nmax", K::integer, 16, "largest N (powers of two from 1)"}, modes, out};
        s["simulate"] = {profile,
                         {"n", K::integer, 1, "subharmonic multiple N"},
                         {"perturb", K::string, "bump:amplitude=0.01", "shape:key=value,..."},
                         {"dt", K::number, 0.01, "time step"},
                         {"tend", K::number, 10.0, "final time"},
                         {"snapshots", K::integer, 10, "number of equally spaced snapshots after t = 0"},
                         ppc,
                         out};
        s["experiment/fixed-n"] = {profile,
                                   {"n", K::list, "1,2", "subharmonic multiples"},
                                   {"perturb", K::string, "random:amplitude=0.01,band=3", "shape:key=value,..."},
                                   {"dt", K::number, 0.01, "time step"},
                                   {"tend", K::number, 0.0, "final time; 0 picks 60 N^2"},
                                   {"snapshot_dt", K::number, 0.5, "snapshot spacing"},
                                   ppc,
                                   modes,
                                   {"t_fit_min", K::number, 5.0, "start of the fit window"},
                                   out};
        s["experiment/uniform"] = {profile,
                                   {"n", K::list, "2,4,8", "subharmonic multiples"},
                                   {"e0", K::number, 0.05, "initial norm ||v0||_{L1 cap H5}"},
                                   {"perturb", K::string, "bump:width=2", "shape:key=value,..."},
                                   {"dt", K::number, 0.02, "time step"},
                                   {"tend", K::number, 1000.0, "final time"},
                                   {"snapshots", K::integer, 120, "log-spaced snapshots"},
                                   ppc,
                                   {"t_fit_min", K::number, 10.0, "start of the fit window"},
                                   out};
        s["experiment/residual"] = {profile,
                                    {"n", K::integer, 2, "subharmonic multiple N"},
                                    {"perturb", K::string, "tone:amplitude=0.05", "shape:key=value,..."},
                                    {"dt", K::number, 0.01, "time step"},
                                    {"t", K::number, 10.0, "middle slice time"},
                                    {"spacing", K::number, 0.05, "slice spacing (multiple of dt)"},
                                    ppc,
                                    {"modulated", K::boolean, true, "fit psi~ variationally; false uses psi = gamma = 0"},
                                    out};
        s["report"] = {{"run", K::string, req, "finished run directory"},
                       {"out", K::string, "", "bundle directory; empty uses <run>/bundle"}};
        return s;
    }();
    return schema;
}

namespace {

bool type_ok(const json& v, KeyType t) {
    switch (t) {
        case KeyType::number: return v.is_number();
        case KeyType::integer: return v.is_number_integer();
        case KeyType::boolean: return v.is_boolean();
        case KeyType::string: return v.is_string();
        case KeyType::list: return v.is_string() || (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
                                || v.is_number();
    }
    return false;
}

const char* type_name(KeyType t) {
    switch (t) {
        case KeyType::number: return "number";
        case KeyType::integer: return "integer";
        case KeyType::boolean: return "boolean";
        case KeyType::string: return "string";
        case KeyType::list: return "list";
    }
    return "?";
}

void check_section(const std::string& name, const json& sec, const ConfigSchema& schema, std::vector<std::string>& errs) {
    const auto it = schema.find(name);
    if (it == schema.end()) {
        errs.push_back("unknown section '" + name + "'");
        return;
    }
    if (!sec.is_object()) {
        errs.push_back("section '" + name + "' must be an object");
        return;
    }
    for (const auto& [k, v] : sec.items()) {
        const auto ks = std::find_if(it->second.begin(), it->second.end(), [&](const KeySpec& s) { return s.name == k; });
        if (ks == it->second.end())
            errs.push_back("unknown key '" + name + "." + k + "'");
        else if (!type_ok(v, ks->type))
            errs.push_back("'" + name + "." + k + "' must be a " + type_name(ks->type));
    }
}

}  // namespace

void validate_config(const json& doc_in, const ConfigSchema& schema) {
    const json& doc = doc_in.contains("manifest_version") ? doc_in.at("config") : doc_in;
    if (!doc.is_object()) throw UsageError("config: top level must be an object");
    std::vector<std::string> errs;
    for (const auto& [name, sec] : doc.items()) {
        if (schema.count(name)) {
            check_section(name, sec, schema, errs);
            continue;
        }
        // nested command groups, e.g. experiment: {uniform: {...}}
        bool group = false;
        for (const auto& [full, keys] : schema)
            if (full.rfind(name + "/", 0) == 0) group = true;
        if (!group || !sec.is_object()) {
            errs.push_back("unknown section '" + name + "'");
            continue;
        }
        for (const auto& [sub, v] : sec.items()) check_section(name + "/" + sub, v, schema, errs);
    }
    if (!errs.empty()) {
        std::string msg = "config rejected:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw UsageError(msg);
    }
}

json config_section(const json& doc_in, const std::string& section) {
    const json& doc = doc_in.contains("manifest_version") ? doc_in.at("config") : doc_in;
    const auto slash = section.find('/');
    if (slash == std::string::npos) return doc.value(section, json::object());
    const auto group = doc.value(section.substr(0, slash), json::object());
    return group.value(section.substr(slash + 1), json::object());
}

json resolve_config(const std::string& section, const json& file_section, const json& flags, const ConfigSchema& schema) {
    const auto it = schema.find(section);
    if (it == schema.end()) throw UsageError("unknown command '" + section + "'");
    json out = json::object();
    std::vector<std::string> missing;
    for (const auto& k : it->second) {
        json v = k.fallback;
        if (file_section.contains(k.name)) v = file_section[k.name];
        if (flags.contains(k.name)) v = flags[k.name];
        if (v.is_null()) {
            missing.push_back(k.name);
            continue;
        }
        if (!type_ok(v, k.type)) throw UsageError("'" + k.name + "' must be a " + type_name(k.type));
        out[k.name] = v;
    }
    for (const auto& [k, v] : flags.items())
        if (!out.contains(k) && std::find(missing.begin(), missing.end(), k) == missing.end())
            throw UsageError("unknown option '" + k + "' for " + section);
    if (!missing.empty()) {
        std::string msg = section + ": missing required";
        for (const auto& m : missing) msg += " " + m;
        throw UsageError(msg);
    }
    return out;
}

std::vector<double> parse_list(const std::string& s) {
    auto num = [&](const std::string& x) {
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(x, &pos);
        } catch (const std::exception&) {
            throw UsageError("bad number '" + x + "' in list '" + s + "'");
        }
        if (pos != x.size()) throw UsageError("bad number '" + x + "' in list '" + s + "'");
        return v;
    };
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string p;
        while (std::getline(ss, p, ':')) parts.push_back(p);
        if (parts.size() != 3) throw UsageError("range must be a:b:n, got '" + s + "'");
        const double a = num(parts[0]), b = num(parts[1]);
        const double nd = num(parts[2]);
        const int n = static_cast<int>(nd);
        if (n < 1 || nd != n) throw UsageError("range count must be a positive integer in '" + s + "'");
        if (n == 1) return {a};
        for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
        return out;
    }
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, ',')) out.push_back(num(p));
    if (out.empty()) throw UsageError("empty list");
    return out;
}

PerturbationSpec parse_perturbation(const std::string& text, int n, int points_per_cell) {
    PerturbationSpec spec;
    spec.n = n;
    spec.points_per_cell = points_per_cell;
    const auto colon = text.find(':');
    try {
        spec.shape = perturbation_shape_from_string(text.substr(0, colon));
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("perturb: ") + e.what());
    }
    if (colon == std::string::npos) return spec;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("perturb: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        const auto num = parse_list(val);
        if (num.size() != 1) throw UsageError("perturb: '" + key + "' needs one value");
        const double x = num[0];
        auto as_int = [&] {
            if (x != std::floor(x)) throw UsageError("perturb: '" + key + "' must be an integer");
            return static_cast<long long>(x);
        };
        if (key == "amplitude") spec.amplitude = x;
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(as_int());
        else if (key == "band") spec.band = static_cast<int>(as_int());
        else if (key == "tone") spec.tone = static_cast<int>(as_int());
        else if (key == "width") spec.width = x;
        else if (key == "mean_zero") spec.mean_zero = x != 0.0;
        else if (key == "e0") spec.target_e0 = x;
        else throw UsageError("perturb: unknown key '" + key + "'");
    }
    return spec;
}

// ---------------------------------------------------------------- report

namespace {

void require_columns(const fs::path& p, const std::vector<std::string>& cols) {
    const auto t = read_csv(p);
    std::string missing;
    for (const auto& c : cols)
        if (t.column(c) < 0) missing += " " + c;
    if (!missing.empty()) throw UsageError(p.string() + ": missing columns" + missing);
}

}  // namespace

ReportResult export_report(const fs::path& run_dir, const fs::path& out) {
    if (!fs::is_directory(run_dir)) throw UsageError("report: " + run_dir.string() + " is not a directory");
    if (fs::is_empty(run_dir)) throw UsageError("report: run directory " + run_dir.string() + " is empty");
    if (!fs::exists(run_dir / "manifest.json")) throw UsageError("report: no manifest.json in " + run_dir.string());
    const auto m = RunManifest::from_json(read_json(run_dir / "manifest.json"));
    std::vector<std::string> missing;
    for (const auto& [p, h] : m.outputs)
        if (!fs::exists(run_dir / p)) missing.push_back(p);
    if (!missing.empty()) {
        std::string msg = "report: outputs missing from " + run_dir.string() + ":";
        for (const auto& p : missing) msg += "\n  " + p;
        throw UsageError(msg);
    }

    // Per-command schema of the consumable bundle.
    std::map<std::string, std::vector<std::string>> columns;
    std::string kind;
    if (m.command == "stabmap") {
        kind = "stabmap";
        columns["stabmap.csv"] = {"eps", "T", "verdict", "theta", "a1", "a2", "d1", "d2"};
    } else if (m.command == "spectrum") {
        kind = "spectrum";
        columns["spectrum.csv"] = {"xi", "re", "im"};
    } else if (m.command == "semigroup") {
        kind = "decay";
        columns["pieces.csv"] = {"t", "piece", "l2", "linf"};
    } else if (m.command == "gaps") {
        kind = "gaps";
        columns["gaps.csv"] = {"N", "delta_N", "N2_delta_N"};
    } else if (m.command == "experiment/uniform" || m.command == "experiment/fixed-n") {
        kind = m.command == "experiment/uniform" ? "residual" : "decay";
        for (const auto& [p, h] : m.outputs)
            if (p.rfind("series_N", 0) == 0)
                columns[p] = m.command == "experiment/uniform" ? std::vector<std::string>{"t", "residual", "psi_inf", "zeta"}
                                                               : std::vector<std::string>{"t", "distance", "shift"};
        if (columns.empty()) throw UsageError("report: no per-N series in " + run_dir.string());
    } else {
        kind = m.command;
    }

    ReportResult r;
    r.kind = kind;
    r.bundle = out.empty() ? run_dir / "bundle" : out;
    fs::create_directories(r.bundle);
    for (const auto& [p, cols] : columns) require_columns(run_dir / p, cols);
    std::set<std::string> copy;
    for (const auto& [p, h] : m.outputs) {
        const auto ext = fs::path(p).extension();
        if ((ext == ".csv" || ext == ".json") && p.rfind("bundle/", 0) != 0) copy.insert(p);
    }
    json index{{"kind", kind}, {"command", m.command}, {"version", m.version}, {"files", json::array()}};
    for (const auto& p : copy) {
        std::string flat = p;
        std::replace(flat.begin(), flat.end(), '/', '_');
        fs::copy_file(run_dir / p, r.bundle / flat, fs::copy_options::overwrite_existing);
        r.files.push_back(flat);
        json entry{{"file", flat}, {"source", p}};
        if (columns.count(p)) entry["columns"] = columns[p];
        index["files"].push_back(entry);
    }
    fs::copy_file(run_dir / "manifest.json", r.bundle / "manifest.json", fs::copy_options::overwrite_existing);
    write_json(r.bundle / "index.json", index);
    return r;
}

}  // namespace kdvks::io
