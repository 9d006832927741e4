#pragma once

#include "kdvks/experiments.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace kdvks::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Bad configuration, flags or input files (CLI exit code 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string version_string();

/// %.17g, enough to round trip any double.
std::string format_double(double v);

/// Binary field: one line of JSON {"length", "num_points"} then num_points
/// little-endian doubles.
void write_field(const fs::path& path, const RealField& f);
RealField read_field(const fs::path& path);
/// Columns x, value.
void write_field_csv(const fs::path& path, const RealField& f);

using CsvCell = std::variant<double, long long, std::string>;

class CsvWriter {
public:
    /// Writes the header immediately; rows must match its width.
    CsvWriter(const fs::path& path, std::vector<std::string> columns);
    void row(const std::vector<CsvCell>& cells);

private:
    std::ofstream out_;
    std::vector<std::string> columns_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
    std::vector<double> numbers(const std::string& name) const;
};
CsvTable read_csv(const fs::path& path);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

/// <stem>.bin plus <stem>.json with {eps, delta, T, c, q, residual, num_points, field}.
void save_profile(const fs::path& dir, const std::string& stem, const WaveProfile& w);
/// Accepts the JSON metadata or the .bin next to it.
WaveProfile load_profile(const fs::path& path);
json profile_metadata(const WaveProfile& w);

/// 64-bit FNV-1a of the file contents, as 16 hex digits.
std::string file_hash(const fs::path& path);

struct RunManifest {
    std::string command;
    json config;
    std::string version;
    std::map<std::string, std::string> inputs;  // path -> hash
    std::vector<std::pair<std::string, std::string>> outputs;  // relative path -> hash
    double wall_clock = 0.0;
    std::vector<std::uint64_t> seeds;

    json to_json() const;
    static RunManifest from_json(const json& j);
};

/// Hashes every regular file under dir (except the manifest) and writes manifest.json.
void write_manifest(const fs::path& dir, RunManifest m);

// ---------------------------------------------------------------- config

enum class KeyType { number, integer, boolean, string, list };

struct KeySpec {
    std::string name;
    KeyType type = KeyType::number;
    json fallback;  // null means required
    std::string doc;
};

/// Sections are named by command path, e.g. "profile" or "experiment/uniform".
using ConfigSchema = std::map<std::string, std::vector<KeySpec>>;

const ConfigSchema& config_schema();

/// Checks a config document against the schema: every section and key must
/// be known and carry the right type. Throws UsageError listing all problems.
void validate_config(const json& doc, const ConfigSchema& schema = config_schema());

/// Section of a (validated) document; manifests are accepted and their
/// config is used when the command matches.
json config_section(const json& doc, const std::string& section);

/// defaults <- file section <- flags, then checked for required keys.
json resolve_config(const std::string& section, const json& file_section, const json& flags,
                    const ConfigSchema& schema = config_schema());

/// "a:b:n" (n points inclusive) or a comma list.
std::vector<double> parse_list(const std::string& s);

/// "shape:key=value,..." with shape in {random, tone, bump, constant} and keys
/// amplitude, seed, band, tone, width, mean_zero, e0.
PerturbationSpec parse_perturbation(const std::string& text, int n, int points_per_cell);

// ---------------------------------------------------------------- report

struct ReportResult {
    fs::path bundle;
    std::vector<std::string> files;
    std::string kind;
};

/// Collects the outputs of a finished run into <run>/bundle (or out) with an
/// index.json. Throws UsageError when the directory is empty, has no
/// manifest, or outputs listed in it are missing.
ReportResult export_report(const fs::path& run_dir, const fs::path& out = {});

}  // namespace kdvks::io
