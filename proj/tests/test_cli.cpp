#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "cli.hpp"
#include "depemp/config.hpp"
#include "depemp/errors.hpp"

using namespace depemp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("depemp_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream os(p);
    os << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "depemp");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

const char* kSmallClt = R"({
  "kind": "clt",
  "model": {"type": "ar1", "alpha": 0.5, "innovation": {"family": "normal"}},
  "functions": [{"type": "identity"}],
  "n": [200],
  "reps": 2000,
  "longrun_length": 65536
})";

}  // namespace

TEST_CASE("missing config exits 2 and writes nothing") {
    const fs::path out = scratch("missing");
    CHECK(run({"experiment", "--config", (out / "nope.json").string(), "--out", (out / "runs").string()}) == 2);
    CHECK_FALSE(fs::exists(out / "runs"));
}

TEST_CASE("command-line errors exit 2") {
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({}) == 2);
    CHECK(run({"verify-ineq", "--suite", "nosuch"}) == 2);
    CHECK(run({"experiment"}) == 2);
}

TEST_CASE("malformed and mistyped configs exit 2 with located diagnostics") {
    const fs::path dir = scratch("malformed");
    write_file(dir / "bad.json", "{\n  \"kind\": \"clt\",\n  \"n\": [100,\n}\n");
    CHECK(run({"experiment", "--config", (dir / "bad.json").string(), "--out", (dir / "runs").string()}) == 2);
    CHECK_FALSE(fs::exists(dir / "runs"));

    try {
        (void)parse_config_text("{\n  \"kind\": \"clt\",\n  \"n\": [100,\n}\n", "cfg.json");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cfg.json:4:") == 0);
    }

    const Json typo = Json::parse(R"({"kind": "clt", "model": {"type": "ar1", "alhpa": 0.5}, "n": [100], "reps": 100})");
    try {
        (void)parse_experiment_config(typo);
        FAIL("expected an unknown-field error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("model.alhpa") != std::string::npos);
    }
    const Json wrong_type = Json::parse(R"({"kind": "clt", "model": {"type": "ar1", "alpha": "half"}, "n": [100], "reps": 100})");
    CHECK_THROWS_WITH_AS(parse_experiment_config(wrong_type), doctest::Contains("model.alpha"), ConfigError);

    write_file(dir / "kind.json", R"({"kind": "simulate", "model": {"type": "iid"}, "n": 10})");
    CHECK(run({"experiment", "--config", (dir / "kind.json").string(), "--out", (dir / "runs").string()}) == 2);
}

TEST_CASE("config digest ignores key order") {
    const Json a = Json::parse(R"({"kind": "clt", "reps": 100, "model": {"type": "ar1", "alpha": 0.5}})");
    const Json b = Json::parse(R"({"model": {"alpha": 0.5, "type": "ar1"}, "reps": 100, "kind": "clt"})");
    const Json c = Json::parse(R"({"model": {"alpha": 0.6, "type": "ar1"}, "reps": 100, "kind": "clt"})");
    CHECK(config_digest(a) == config_digest(b));
    CHECK(config_digest(a) != config_digest(c));
}

TEST_CASE("experiment configs parse into typed settings") {
    const ExperimentConfig cfg = parse_experiment_config(Json::parse(kSmallClt));
    CHECK(cfg.kind == "clt");
    CHECK(cfg.n_values == std::vector<std::size_t>{200});
    CHECK(cfg.reps == 2000);
    CHECK(cfg.functions.size() == 1);
    CHECK(cfg.digest == config_digest(Json::parse(kSmallClt)));
    const ExperimentConfig fam = parse_experiment_config(Json::parse(R"({
      "kind": "tightness", "model": {"type": "iid"}, "n": [100], "reps": 100,
      "functions": [{"type": "class", "class": {"kind": "sobolev", "gamma": 1.0, "mu": 0.5}, "count": 5}]})"));
    CHECK(fam.functions.size() == 5);
}

TEST_CASE("verify-ineq maximal suite passes without writing outputs") {
    CHECK(run({"verify-ineq", "--suite", "maximal", "--trials", "10000"}) == 0);
}

TEST_CASE("experiment run writes reproducible outputs and a manifest") {
    const fs::path dir = scratch("clt");
    write_file(dir / "clt_ar1.json", kSmallClt);
    const std::string cfg = (dir / "clt_ar1.json").string();
    REQUIRE(run({"experiment", "--config", cfg, "--seed", "42", "--out", (dir / "a").string()}) == 0);
    REQUIRE(run({"experiment", "--config", cfg, "--seed", "42", "--out", (dir / "b").string(), "--threads", "2"}) == 0);
    for (const char* f : {"summary.json", "data.csv"}) {
        REQUIRE(fs::exists(dir / "a" / f));
        CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
    }
    const Json manifest = Json::parse(read_file(dir / "a" / "manifest.json"));
    CHECK(manifest.at("master_seed").get<std::uint64_t>() == 42);
    CHECK(manifest.at("config_digest") == config_digest(Json::parse(kSmallClt)));
    CHECK(manifest.at("verdict").at("pass").get<bool>());
    const Json summary = Json::parse(read_file(dir / "a" / "summary.json"));
    CHECK(summary.at("seed").get<std::uint64_t>() == 42);

    REQUIRE(run({"experiment", "--config", cfg, "--seed", "43", "--out", (dir / "c").string()}) == 0);
    CHECK(read_file(dir / "a" / "data.csv") != read_file(dir / "c" / "data.csv"));
}

TEST_CASE("a failing asserted check exits 1") {
    const fs::path dir = scratch("fail");
    write_file(dir / "const.json", R"({"kind": "clt", "model": {"type": "iid"}, "functions": [{"type": "constant", "value": 2}],
                                      "n": [100], "reps": 500, "longrun_length": 4096})");
    CHECK(run({"experiment", "--config", (dir / "const.json").string(), "--out", (dir / "runs").string()}) == 1);
    const Json manifest = Json::parse(read_file(dir / "runs" / "manifest.json"));
    CHECK_FALSE(manifest.at("verdict").at("pass").get<bool>());
}

TEST_CASE("other subcommands produce their outputs") {
    const fs::path dir = scratch("subs");
    write_file(dir / "sim.json", R"({"kind": "simulate", "model": {"type": "ar1", "alpha": 0.3}, "n": 50, "seed": 1})");
    CHECK(run({"simulate", "--config", (dir / "sim.json").string(), "--out", (dir / "sim").string()}) == 0);
    CHECK(fs::exists(dir / "sim" / "path.csv"));
    CHECK(run({"simulate", "--config", (dir / "sim.json").string(), "--out", (dir / "simj").string(), "--format", "json"}) == 0);
    CHECK(fs::exists(dir / "simj" / "path.json"));

    write_file(dir / "dec.json", R"({"kind": "decompose", "model": {"type": "ar1", "alpha": 0.6, "innovation": {"family": "logistic"}},
                                    "n": 200, "functions": [{"type": "huber", "theta": 0.2}]})");
    CHECK(run({"decompose", "--config", (dir / "dec.json").string(), "--out", (dir / "dec").string()}) == 0);
    CHECK(fs::exists(dir / "dec" / "decompose.csv"));

    write_file(dir / "co.json", R"({"kind": "coeffs", "model": {"type": "ar1", "alpha": 0.5}, "lags": [1, 2], "reps": 1000})");
    CHECK(run({"coeffs", "--config", (dir / "co.json").string(), "--out", (dir / "co").string()}) == 0);
    CHECK(fs::exists(dir / "co" / "proj_bounds.csv"));
}
