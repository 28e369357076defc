#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qgs/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "qgs/grid.hpp"

using namespace qgs;

static std::string thrown_message(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST_CASE("empty text yields the documented defaults") {
    RunConfig c = parse_config("");
    CHECK(c.kind == SelectionKind::quadratic);
    REQUIRE(c.coeffs.size() == 1);
    CHECK(c.coeffs[0] == 1.0);
    CHECK(c.z0 == 0.0);
    CHECK(c.z_star0 == 0.0);
    REQUIRE(c.epsilon.size() == 1);
    CHECK(c.epsilon[0] == 0.1);
    CHECK(c.zmin == -2.0);
    CHECK(c.zmax == 2.0);
    CHECK(c.n == 512);
    CHECK(c.t_end == 5.0);
    CHECK(c.dt_factor == 0.1);
    CHECK(c.snapshot_every == 0.25);
    CHECK(c.alpha == 0.4);
    CHECK(c.backend == Backend::fft);
    CHECK(c.quad_order == 40);
    CHECK(c.q0 == 0.0);
    CHECK(c.p0 == 0.0);
    CHECK(c.lambda0 == 0.0);
    CHECK(c.init_vstar);
    CHECK(c.out_dir == "out");
}

TEST_CASE("comments, blanks, and inline trailers are stripped") {
    RunConfig c = parse_config(
        "# full-line comment\n"
        "\n"
        "epsilon = 0.2, 0.1, 0.05  # sweep values\n"
        "grid.n = 1024\n"
        "init.vstar = off\n");
    REQUIRE(c.epsilon.size() == 3);
    CHECK(c.epsilon[0] == 0.2);
    CHECK(c.epsilon[2] == 0.05);
    CHECK(c.n == 1024);
    CHECK_FALSE(c.init_vstar);
}

TEST_CASE("z_star0 follows z0 unless set explicitly") {
    RunConfig a = parse_config("selection.z0 = 0.5\n");
    CHECK(a.z_star0 == 0.5);
    RunConfig b = parse_config("selection.z0 = 0.5\nz_star0 = 1.0\n");
    CHECK(b.z_star0 == 1.0);
}

TEST_CASE("alpha is capped strictly below 2 - ln3/ln2") {
    CHECK(parse_config("alpha = 0.41\n").alpha == 0.41);
    CHECK_THROWS_AS(parse_config("alpha = 0.42\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("alpha = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("alpha = 0\n"), ConfigError);
}

TEST_CASE("malformed input is rejected with the line number") {
    std::string msg = thrown_message("grid.n = 1024\n\nfoo = 1\n");
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("unknown key") != std::string::npos);

    CHECK_THROWS_AS(parse_config("grid.n = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("grid.n = 1000\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("grid.n = 512.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("epsilon = -0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("epsilon = \n"), ConfigError);
    CHECK_THROWS_AS(parse_config("time.dt_factor = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("time.t_end = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("operator.backend = gpu\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("operator.quad_order = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("just a line\n"), ConfigError);
    CHECK(parse_config("time.dt_factor = 0.2\n").dt_factor == 0.2);
}

TEST_CASE("cross-field constraints are enforced after parsing") {
    CHECK_THROWS_AS(parse_config("grid.zmin = 2\ngrid.zmax = -2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("time.t_end = 1\ntime.snapshot_every = 2\n"), ConfigError);
    // selection arity surfaces at parse time, not at first use
    CHECK_THROWS_AS(parse_config("selection.kind = double_well\nselection.coeffs = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("selection.coeffs = 1, 2\n"), ConfigError);
}

TEST_CASE("selection_from builds the configured model") {
    RunConfig c = parse_config(
        "selection.kind = double_well\n"
        "selection.coeffs = 2, 0.3\n");
    SelectionModel m = selection_from(c);
    double z = 0.7, w = z * z - 1.0;
    CHECK(eval_m(m, z) == doctest::Approx(2.0 * w * w + 0.3 * z).epsilon(1e-13));
}

TEST_CASE("the resolved text echoes back to an identical config") {
    RunConfig c = parse_config(
        "selection.kind = polynomial\n"
        "selection.coeffs = 0.25, -0.125, 0.5\n"
        "selection.z0 = -0.375\n"
        "z_star0 = 0.625\n"
        "epsilon = 0.2, 0.1\n"
        "grid.zmin = -3.5\n"
        "grid.zmax = 4.5\n"
        "grid.n = 2048\n"
        "time.t_end = 2.5\n"
        "time.dt_factor = 0.05\n"
        "time.snapshot_every = 0.5\n"
        "alpha = 0.4\n"
        "operator.backend = direct\n"
        "operator.quad_order = 30\n"
        "init.q0 = 0.125\n"
        "init.p0 = -0.25\n"
        "init.lambda0 = 0.0625\n"
        "init.vstar = off\n"
        "out_dir = results\n");
    RunConfig r = parse_config(resolved_config_text(c));
    CHECK(r.kind == c.kind);
    CHECK(r.coeffs == c.coeffs);
    CHECK(r.z0 == c.z0);
    CHECK(r.z_star0 == c.z_star0);
    CHECK(r.epsilon == c.epsilon);
    CHECK(r.zmin == c.zmin);
    CHECK(r.zmax == c.zmax);
    CHECK(r.n == c.n);
    CHECK(r.t_end == c.t_end);
    CHECK(r.dt_factor == c.dt_factor);
    CHECK(r.snapshot_every == c.snapshot_every);
    CHECK(r.alpha == c.alpha);
    CHECK(r.backend == c.backend);
    CHECK(r.quad_order == c.quad_order);
    CHECK(r.q0 == c.q0);
    CHECK(r.p0 == c.p0);
    CHECK(r.lambda0 == c.lambda0);
    CHECK(r.init_vstar == c.init_vstar);
    CHECK(r.out_dir == c.out_dir);
}

TEST_CASE("config files load through the same parser") {
    const std::string path = "test_config_tmp.conf";
    {
        std::ofstream os(path);
        os << "epsilon = 0.25\ngrid.n = 256\n";
    }
    RunConfig c = load_config_file(path);
    CHECK(c.epsilon[0] == 0.25);
    CHECK(c.n == 256);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config_file("no_such_file.conf"), ConfigError);
}
