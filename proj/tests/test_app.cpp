#include "doctest.h"

#include "sirhjb/commands.hpp"
#include "sirhjb/error.hpp"
#include "sirhjb/plot.hpp"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace sirhjb;
namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string& name) { return std::string(SIRHJB_SOURCE_DIR) + "/configs/" + name; }

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sirhjb_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}})";

} // namespace

TEST_CASE("shipped configs round-trip through serialization") {
    for (const char* name : {"scenario_a.json", "scenario_b.json", "scenario_c.json"}) {
        CAPTURE(name);
        const ExperimentConfig c = load_config(config_path(name));
        const std::string once = serialize_config(c);
        const ExperimentConfig again = parse_config(once);
        CHECK(serialize_config(again) == once);
        CHECK(canonical_text(again.schedule) == canonical_text(c.schedule));
        CHECK(again.ensemble.seed == c.ensemble.seed);
        CHECK(again.verify.probes == c.verify.probes);
        CHECK(again.hjb.has_value() == c.hjb.has_value());
    }
}

TEST_CASE("round trip of randomly generated configs") {
    PortableRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        ExperimentConfig c;
        const double beta = rng.uniform(0.1, 1.0), gamma = rng.uniform(0.05, 0.5);
        const double amp = rng.uniform(0.0, 0.9) * gamma;
        c.schedule = RateSchedule(SinusoidalRates{Wave{beta}, Wave{gamma, amp, rng.uniform(0.5, 2.0), rng.uniform(0, 3)}},
                                  RateBounds{beta, beta, gamma - amp, gamma + amp});
        c.mu0 = rng.uniform(0.05, 0.2);
        c.mu = c.mu0 * rng.uniform(0.01, 1.0);
        c.datum = Datum{rng.uniform(0, 2), rng.uniform(0.01, 1), rng.uniform(0, 5), ControlSignal({1.5, 2.25}, {1, 0, 1})};
        c.ensemble.seed = std::uint64_t(rng.uniform() * 1e18);
        c.ensemble.y_lo = c.mu0;
        c.ensemble.size = rng.index(2000);
        c.verify.probes = {{rng.uniform(), rng.uniform(), rng.uniform()}};
        c.verify.unsafe_mu = rng.uniform(0.01, 0.1);
        c.optimize.family.n_intervals = 1 + rng.index(10);
        c.eradication.tol_cross = rng.uniform(1e-12, 1e-8);
        const std::string text = serialize_config(c);
        const ExperimentConfig back = parse_config(text);
        CHECK(serialize_config(back) == text);
        CHECK(back.mu == c.mu);
        CHECK(back.datum.y == c.datum.y);
        CHECK(back.eradication.tol_cross == c.eradication.tol_cross);
    }
}

TEST_CASE("defaults fill a minimal config") {
    const ExperimentConfig c = parse_config(kMinimal);
    CHECK(c.mu0 == 0.1);
    CHECK(c.mu == 0.01);
    CHECK(c.ensemble.y_lo == 0.1);
    CHECK_FALSE(c.hjb.has_value());
}

TEST_CASE("schema violations name the field path") {
    CHECK(config_error("{").find("<root>: invalid JSON") == 0);
    CHECK(config_error("{}") == "schedule: missing required section");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": "x", "gamma": 0.2}})") ==
          "schedule.beta: expected a number");
    CHECK(config_error(R"({"schedule": {"kind": "wobbly"}})").find("schedule.kind:") == 0);
    CHECK(config_error(R"({"schedule": {"kind": "sinusoidal", "beta": {"mean": 0.4}, "gamma": {"mean": 0.3}}})") ==
          "schedule.bounds: required for time-varying schedules");
    CHECK(config_error(R"({"schedule": {"kind": "sinusoidal", "beta": {"mean": 0.4}, "gamma": {"mean": 0.3, "amp": 1},
                           "bounds": {}}})")
              .find("schedule.gamma.amp: unknown field") == 0);
    CHECK(config_error(std::string(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}, "mu": 0.5})")) ==
          "mu: must satisfy 0 < mu <= mu0");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}, "grid": {"nx": -3}})") ==
          "grid.nx: expected a nonnegative integer");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}, "grid": {"nx": 1}})") ==
          "grid.nx must be at least 2");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}, "grid": {"x_max": 0.3}})") ==
          "grid.x_max: must contain [0, gamma_hi / beta_lo]");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}, "grid": {"y_min": 0.02}})") ==
          "grid.y_min: must equal mu for the threshold boundary");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}, "ensemble": {"y_lo": 0.05}})") ==
          "ensemble.y_lo: ensemble data need y >= mu0");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2},
                           "verify": {"probes": [[0, 1]]}})") == "verify.probes[0]: expected [x, y, t]");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2},
                           "verify": {"stability": {"deltas": [1e-3, 1e-2]}}})") ==
          "verify.stability.deltas: must be positive and descending");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2}, "colour": 1})") ==
          "colour: unknown field");
    CHECK(config_error(R"({"schedule": {"kind": "constant", "beta": 0.5, "gamma": 0.2},
                           "datum": {"control": {"breakpoints": [1], "values": [0, 2]}}})")
              .find("datum.control:") == 0);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("output directory precedence") {
    ExperimentConfig c = parse_config(kMinimal);
    c.output_dir = "from_config";
    CHECK(resolve_output_dir(std::string("from_cli"), "from_env", c) == "from_cli");
    CHECK(resolve_output_dir(std::nullopt, "from_env", c) == "from_env");
    CHECK(resolve_output_dir(std::nullopt, "", c) == "from_config");
    CHECK(resolve_output_dir(std::nullopt, nullptr, c) == "from_config");
}

TEST_CASE("svg writer emits markers with exact data coordinates") {
    Figure f;
    f.title = "a < b";
    f.series.push_back({"line", {0, 1, 2}, {0, 1, 0}});
    f.markers.push_back({"upper", "upper", 1.0 / 3.0, 0.5});
    std::ostringstream out;
    write_svg(f, out);
    const std::string svg = out.str();
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("a &lt; b") != std::string::npos);
    CHECK(svg.find("id=\"marker-upper\" data-x=\"0.33333333333333331\" data-y=\"0.5\"") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    Figure bad;
    bad.series.push_back({"bad", {0, 1}, {0}});
    CHECK_THROWS_AS(write_svg(bad, out), DomainError);
}

TEST_CASE("mu1 on scenario A is half of mu0") {
    const fs::path dir = fresh_dir("mu1");
    std::ostringstream log;
    CHECK(run_command("mu1", load_config(config_path("scenario_a.json")), dir.string(), log) == 0);
    const std::string report = read_text(dir / "mu1.txt");
    std::smatch m;
    REQUIRE(std::regex_search(report, m, std::regex("mu1: ([0-9.eE+-]+)")));
    CHECK(std::stod(m[1]) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("fig1 on scenario B marks distinct eradication times") {
    const fs::path dir = fresh_dir("fig1");
    std::ostringstream log;
    const ExperimentConfig c = load_config(config_path("scenario_b.json"));
    REQUIRE(run_command("fig1", c, dir.string(), log) == 0);
    const std::string svg = read_text(dir / "fig1.svg");
    std::smatch up, lo;
    REQUIRE(std::regex_search(svg, up, std::regex("id=\"marker-upper\" data-x=\"([^\"]+)\"")));
    REQUIRE(std::regex_search(svg, lo, std::regex("id=\"marker-lower\" data-x=\"([^\"]+)\"")));
    CHECK(std::stod(up[1]) - std::stod(lo[1]) > 0.1);
    CHECK(read_text(dir / "fig1_summary.csv").rfind("x,y,t,mu,crossings,upper,lower,gap\n", 0) == 0);
    CHECK(fs::exists(dir / "fig1_trajectory.csv"));
    CHECK(fs::exists(dir / "fig1_crossings.csv"));
}

TEST_CASE("fig2 lists the effective boundary pieces") {
    const fs::path dir = fresh_dir("fig2");
    std::ostringstream log;
    REQUIRE(run_command("fig2", load_config(config_path("scenario_c.json")), dir.string(), log) == 0);
    const std::string csv = read_text(dir / "fig2.csv");
    CHECK(csv.find("y_mu0_effective,0,0.10000000000000001,1.25,0.10000000000000001") != std::string::npos);
    CHECK(csv.find("x_zero,") != std::string::npos);
    CHECK(csv.find("t_zero_slab,") != std::string::npos);
    CHECK(read_text(dir / "fig2.svg").find("x = 0") != std::string::npos);
}

TEST_CASE("verify on scenario A passes and is reproducible") {
    const ExperimentConfig c = load_config(config_path("scenario_a.json"));
    const fs::path a = fresh_dir("verify_a1"), b = fresh_dir("verify_a2");
    std::ostringstream log;
    CHECK(run_command("verify", c, a.string(), log) == 0);
    CHECK(run_command("verify", c, b.string(), log) == 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        CAPTURE(entry.path().filename().string());
        CHECK(read_text(entry.path()) == read_text(b / entry.path().filename()));
        ++compared;
    }
    CHECK(compared >= 3);
    CHECK(read_text(a / "verify_report.txt").find("all checks passed") != std::string::npos);
}

TEST_CASE("verify on scenario B reports the missing certificate") {
    ExperimentConfig c = load_config(config_path("scenario_b.json"));
    c.ensemble.size = 50;
    const fs::path dir = fresh_dir("verify_b");
    std::ostringstream log;
    CHECK(run_command("verify", c, dir.string(), log) == 1);
    const std::string report = read_text(dir / "verify_report.txt");
    CHECK(report.find("FAIL mu1_certificate") != std::string::npos);
    CHECK(report.find("PASS stability_ratios") != std::string::npos);
}

TEST_CASE("commands without their inputs fail cleanly") {
    std::ostringstream log;
    const fs::path dir = fresh_dir("errors");
    CHECK_THROWS_AS(run_command("hjb", load_config(config_path("scenario_b.json")), dir.string(), log), DomainError);
    CHECK_THROWS_AS(run_command("frobnicate", parse_config(kMinimal), dir.string(), log), DomainError);
}
