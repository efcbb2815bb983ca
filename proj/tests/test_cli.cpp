#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hmcf/cli_io.hpp"

using namespace hmcf;
namespace fs = std::filesystem;

namespace {

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    int rc = std::system(("./hmcf " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("parse_field evaluates and differentiates") {
    ScalarField koranyi = parse_field("(x1^2+x2^2)^2+16*x3^2-1", 3);
    CHECK(koranyi.smooth);
    CHECK(koranyi.eval(vec3(1, 0, 0)) == doctest::Approx(0));
    CHECK(koranyi.eval(vec3(0, 0, 0.25)) == doctest::Approx(0));
    Vec g = koranyi.gradient(vec3(1, 0, 0));
    CHECK(g(0) == doctest::Approx(4));
    CHECK(g(2) == doctest::Approx(0));
    Mat h = koranyi.hessian(vec3(1, 0, 0));
    CHECK(h(0, 0) == doctest::Approx(12));
    CHECK(h(2, 2) == doctest::Approx(32));

    ScalarField lin = parse_field("x1", 2);
    Vec p(2);
    p << 0.3, -0.7;
    CHECK(lin.gradient(p)(0) == doctest::Approx(1));
    CHECK(lin.gradient(p)(1) == doctest::Approx(0));
    CHECK(lin.hessian(p).norm() == doctest::Approx(0));

    ScalarField kink = parse_field("abs(x3)-x1^2", 3);
    CHECK_FALSE(kink.smooth);
    CHECK_FALSE(kink.has_analytic_derivatives());
    CHECK(kink.eval(vec3(1, 0, -2)) == doctest::Approx(1));

    CHECK_THROWS(parse_field("x1+", 3));
    CHECK_THROWS_AS(parse_field("x3", 2), std::invalid_argument);
}

TEST_CASE("named field specs") {
    ScalarField eb = resolve_field_spec("euclidean_ball(2)", 3);
    CHECK(eb.eval(vec3(2, 0, 0)) == doctest::Approx(0));
    CHECK(eb.eval(vec3(0, 0, 0)) == doctest::Approx(-4));
    ScalarField kb = resolve_field_spec("koranyi_ball(1)", 3);
    CHECK(kb.eval(vec3(1, 0, 0)) == doctest::Approx(0));
    CHECK(kb.eval(vec3(0, 0, 0.25)) == doctest::Approx(0));
    ScalarField ex = resolve_field_spec("x1+x2", 3);
    CHECK(ex.eval(vec3(1, 2, 9)) == doctest::Approx(3));
}

TEST_CASE("csv formatting round-trips doubles") {
    CHECK(format_double(1.0) == "1");
    double v = 0.1 + 0.2;
    CHECK(std::stod(format_double(v)) == v);
    CHECK(std::stod(format_double(M_PI)) == M_PI);
    std::string csv = csv_string({"a", "b"}, {{1.5, 2.0}, {M_PI, -0.0}});
    CHECK(csv.substr(0, 4) == "a,b\n");
    CHECK(csv.find("1.5,2") != std::string::npos);
}

TEST_CASE("run config json round trip") {
    RunConfig c;
    c.geometry = "heisenberg(2)";
    c.field = "x1^2";
    c.h = 0.03125;
    c.T = 0.7;
    c.n_paths = 777;
    c.p_list = {1, 3.5};
    c.seed = 424242;
    c.branch = "upper_envelope";
    c.box_lo = {-1, -1, -1};
    c.box_hi = {1, 1, 1};
    RunConfig d = RunConfig::from_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    CHECK(d.geometry == c.geometry);
    CHECK(d.h == c.h);
    CHECK(d.seed == c.seed);
    CHECK(d.p_list == c.p_list);
}

TEST_CASE("crossval constant cost") {
    RunConfig cfg;
    cfg.field = "constant_cost";
    cfg.T = 0.05;
    cfg.h = 0.25;
    cfg.n_paths = 200;
    cfg.dt = 1e-2;
    CrossvalReport rep = crossval(cfg);
    REQUIRE(rep.rows.size() >= 2);
    CHECK(rep.all_pass());
    for (const auto& r : rep.rows) CHECK(r.discrepancy <= r.tolerance);
    CHECK_THROWS_AS(crossval(RunConfig{.field = "nonsense"}), std::invalid_argument);
}

TEST_CASE("crossval vertical plane") {
    RunConfig cfg;
    cfg.field = "vertical_plane";
    cfg.T = 0.02;
    cfg.h = 1.0 / 16.0;
    cfg.n_paths = 400;
    cfg.dt = 1e-3;
    CrossvalReport rep = crossval(cfg);
    CHECK(rep.all_pass());
    nlohmann::json j = rep.to_json();
    CHECK(j["all_pass"] == true);
    CHECK(j["rows"].size() == rep.rows.size());
}

TEST_CASE("cli exit codes") {
    if (!fs::exists("hmcf")) return;  // only meaningful from the build tree
    CHECK(run_cli("--version") == 0);
    CHECK(run_cli("curvature --geometry 'heisenberg(1)' --field 'koranyi_ball(1)' --point 1,0,0") ==
          0);
    // config errors -> 2
    CHECK(run_cli("curvature --geometry 'nosuch' --field 'x1' --point 0,0,0") == 2);
    CHECK(run_cli("curvature --geometry 'heisenberg(1)' --field 'x1+' --point 0,0,0") == 2);
    CHECK(run_cli("evolve-grid --geometry 'heisenberg(1)' --initial x1 --T 0.001") == 2);
    CHECK(run_cli("") == 2);
}

TEST_CASE("cli outputs are deterministic") {
    if (!fs::exists("hmcf")) return;
    fs::path d1 = "cli_test_out1", d2 = "cli_test_out2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    std::string args = "evolve-rotational --f0 'x1^2/2' --rmax 1 --h 0.1 --T 0.005 --output-dir ";
    REQUIRE(run_cli(args + d1.string()) == 0);
    REQUIRE(run_cli(args + d2.string()) == 0);
    CHECK(slurp(d1 / "profile.csv") == slurp(d2 / "profile.csv"));
    CHECK(!slurp(d1 / "config.json").empty());
    fs::remove_all(d1);
    fs::remove_all(d2);
}
