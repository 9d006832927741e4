#include "common.hpp"

#include "kdvks/io.hpp"

#include <doctest.h>

#include <cstring>
#include <limits>

using namespace kdvks;
using namespace kdvks::io;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("kdvks_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("fields round trip bit for bit") {
    TempDir d("field");
    std::mt19937_64 rng(3);
    const PeriodicGrid g(7.85 * 3, 96);
    auto f = testing::random_smooth(g, rng, 9);
    f.values[5] = std::numeric_limits<double>::denorm_min();
    f.values[6] = -0.0;
    write_field(d.path / "f.bin", f);
    const auto back = read_field(d.path / "f.bin");
    CHECK(back.grid.length() == g.length());
    REQUIRE(back.size() == f.size());
    CHECK(std::memcmp(back.values.data(), f.values.data(), f.values.size() * sizeof(double)) == 0);

    std::ofstream(d.path / "bad.bin") << "{\"length\": 1.0}\n";
    CHECK_THROWS_AS(read_field(d.path / "bad.bin"), UsageError);
    {
        std::ofstream o(d.path / "short.bin");
        o << "{\"length\": 1.0, \"num_points\": 8}\n";
        o << "abc";
    }
    CHECK_THROWS_AS(read_field(d.path / "short.bin"), UsageError);
}

TEST_CASE("csv numbers round trip at 17 digits") {
    TempDir d("csv");
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> xs;
    {
        CsvWriter w(d.path / "t.csv", {"i", "x", "tag"});
        for (long long i = 0; i < 200; ++i) {
            xs.push_back(u(rng) * std::pow(10.0, static_cast<double>(i % 40 - 20)));
            w.row({i, xs.back(), std::string("r") + std::to_string(i)});
        }
        CHECK_THROWS_AS(w.row({1.0}), std::logic_error);
    }
    const auto t = read_csv(d.path / "t.csv");
    CHECK(t.columns == std::vector<std::string>{"i", "x", "tag"});
    CHECK(t.numbers("x") == xs);
    CHECK(t.column("nope") == -1);
    CHECK_THROWS_AS(t.numbers("nope"), UsageError);
}

TEST_CASE("profiles survive save and load") {
    TempDir d("profile");
    const auto& w = testing::reference_wave();
    save_profile(d.path, "wave", w);
    for (const char* name : {"wave.json", "wave.bin"}) {
        const auto back = load_profile(d.path / name);
        CHECK(back.period == w.period);
        CHECK(back.speed == w.speed);
        CHECK(back.params.delta == w.params.delta);
        CHECK(back.profile.values == w.profile.values);
    }
}

TEST_CASE("config validation rejects unknown or mistyped keys") {
    CHECK_NOTHROW(validate_config(json::parse(R"({"profile": {"period": 8.0}, "experiment": {"uniform": {"n": "2,4"}}})")));
    CHECK_THROWS_AS(validate_config(json::parse(R"({"profle": {}})")), UsageError);
    CHECK_THROWS_AS(validate_config(json::parse(R"({"profile": {"perod": 8.0}})")), UsageError);
    CHECK_THROWS_AS(validate_config(json::parse(R"({"profile": {"points": 1.5}})")), UsageError);
    CHECK_THROWS_AS(validate_config(json::parse(R"({"experiment": {"bogus": {}}})")), UsageError);
    CHECK_THROWS_AS(validate_config(json::parse(R"([1, 2])")), UsageError);
    try {
        validate_config(json::parse(R"({"profile": {"perod": 8.0, "points": "x"}})"));
        FAIL("accepted");
    } catch (const UsageError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("perod") != std::string::npos);
        CHECK(msg.find("points") != std::string::npos);
    }
}

TEST_CASE("flags override the file, which overrides defaults") {
    const auto file = json::parse(R"({"period": 8.0, "points": 64})");
    const auto flags = json::parse(R"({"points": 96, "out": "o"})");
    const auto c = resolve_config("profile", file, flags);
    CHECK(c["period"] == 8.0);
    CHECK(c["points"] == 96);
    CHECK(c["eps"] == 0.0);
    CHECK_THROWS_AS(resolve_config("profile", file, json::object()), UsageError);  // out is required
    CHECK_THROWS_AS(resolve_config("profile", file, json::parse(R"({"out": "o", "zz": 1})")), UsageError);
    CHECK_THROWS_AS(resolve_config("nope", file, flags), UsageError);

    const auto doc = json::parse(R"({"experiment": {"uniform": {"e0": 0.1}}})");
    CHECK(config_section(doc, "experiment/uniform")["e0"] == 0.1);
    CHECK(config_section(doc, "profile").empty());
    RunManifest m;
    m.command = "profile";
    m.config = {{"profile", file}};
    CHECK(config_section(m.to_json(), "profile") == file);
}

TEST_CASE("lists and perturbation strings") {
    CHECK(parse_list("1,2,4") == std::vector<double>{1, 2, 4});
    const auto r = parse_list("6.8:9.2:13");
    REQUIRE(r.size() == 13);
    CHECK(r[12] == doctest::Approx(9.2));
    CHECK(parse_list("3:5:1") == std::vector<double>{3});
    CHECK_THROWS_AS(parse_list("1:2"), UsageError);
    CHECK_THROWS_AS(parse_list("1:2:0"), UsageError);
    CHECK_THROWS_AS(parse_list("1,x"), UsageError);

    const auto p = parse_perturbation("random:amplitude=0.02,seed=7,band=3,mean_zero=1,e0=0.1", 4, 96);
    CHECK(p.shape == PerturbationShape::random);
    CHECK(p.amplitude == 0.02);
    CHECK(p.seed == 7u);
    CHECK(p.band == 3);
    CHECK(p.mean_zero);
    CHECK(p.target_e0.value() == 0.1);
    CHECK(p.n == 4);
    CHECK(p.points_per_cell == 96);
    CHECK(parse_perturbation("bump", 1, 128).shape == PerturbationShape::bump);
    CHECK_THROWS_AS(parse_perturbation("wave:amplitude=1", 1, 128), UsageError);
    CHECK_THROWS_AS(parse_perturbation("tone:tone=1.5", 1, 128), UsageError);
    CHECK_THROWS_AS(parse_perturbation("tone:colour=1", 1, 128), UsageError);
    CHECK_THROWS_AS(parse_perturbation("tone:amplitude", 1, 128), UsageError);
}

TEST_CASE("manifests list every output with its hash") {
    TempDir d("manifest");
    std::ofstream(d.path / "a.csv") << "x\n1\n";
    fs::create_directories(d.path / "snapshots");
    std::ofstream(d.path / "snapshots" / "u.bin") << "zz";
    RunManifest m;
    m.command = "simulate";
    m.config = {{"simulate", {{"n", 1}}}};
    m.seeds = {5};
    write_manifest(d.path, m);
    const auto back = RunManifest::from_json(read_json(d.path / "manifest.json"));
    CHECK(back.command == "simulate");
    CHECK(back.seeds == std::vector<std::uint64_t>{5});
    REQUIRE(back.outputs.size() == 2);
    CHECK(back.outputs[0].first == "a.csv");
    CHECK(back.outputs[1].first == "snapshots/u.bin");
    CHECK(back.outputs[0].second == file_hash(d.path / "a.csv"));
    CHECK(file_hash(d.path / "a.csv") != file_hash(d.path / "snapshots" / "u.bin"));
}

TEST_CASE("report refuses incomplete runs and checks columns") {
    TempDir d("report");
    CHECK_THROWS_AS(export_report(d.path / "missing"), UsageError);
    CHECK_THROWS_AS(export_report(d.path), UsageError);  // empty
    std::ofstream(d.path / "gaps.csv") << "N,delta_N,N2_delta_N\n1,0.5,0.5\n";
    CHECK_THROWS_AS(export_report(d.path), UsageError);  // no manifest
    RunManifest m;
    m.command = "gaps";
    write_manifest(d.path, m);
    const auto r = export_report(d.path, d.path / "out");
    CHECK(r.kind == "gaps");
    CHECK(fs::exists(d.path / "out" / "index.json"));
    CHECK(fs::exists(d.path / "out" / "gaps.csv"));

    std::ofstream(d.path / "gaps.csv") << "N,delta\n1,0.5\n";
    CHECK_THROWS_AS(export_report(d.path, d.path / "out2"), UsageError);
    fs::remove(d.path / "gaps.csv");
    CHECK_THROWS_AS(export_report(d.path, d.path / "out3"), UsageError);
}
