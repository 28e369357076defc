#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qgs/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace qgs;

TEST_CASE("make_grid validates shape") {
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 1000), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 1.0, 64), std::invalid_argument);
    Grid g = make_grid(-2.0, 2.0, 64);
    CHECK(g.h == doctest::Approx(4.0 / 63.0).epsilon(1e-15));
    CHECK(g.z(0) == -2.0);
    CHECK(g.z(63) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("field_mass integrates a normalized Gaussian") {
    Grid g = make_grid(-8.0, 8.0, 1024);
    Field f = make_field(g);
    for (int i = 0; i < g.n; ++i)
        f[i] = std::exp(-0.5 * g.z(i) * g.z(i)) / std::sqrt(2.0 * M_PI);
    CHECK(field_mass(f) == doctest::Approx(1.0).epsilon(1e-12));
}

static double sup_err(const Field& a, const Field& b) {
    double s = 0.0;
    for (int i = 0; i < a.n(); ++i) s = std::max(s, std::fabs(a[i] - b[i]));
    return s;
}

TEST_CASE("derivative is second order, boundaries included") {
    auto build = [](int n) {
        Grid g = make_grid(-2.0, 2.0, n);
        Field f = make_field(g);
        for (int i = 0; i < n; ++i) f[i] = std::sin(g.z(i));
        return f;
    };
    for (int k = 1; k <= 3; ++k) {
        CAPTURE(k);
        double err[2];
        int idx = 0;
        for (int n : {512, 1024}) {
            Field f = build(n);
            Field d = derivative(f, k);
            Field exact = make_field(f.grid);
            for (int i = 0; i < n; ++i) {
                double z = f.grid.z(i);
                exact[i] = (k == 1) ? std::cos(z) : (k == 2) ? -std::sin(z) : -std::cos(z);
            }
            err[idx++] = sup_err(d, exact);
        }
        CHECK(err[0] < 1e-3);
        double ratio = err[0] / err[1];
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.5);
    }
    CHECK_THROWS_AS(derivative(build(64), 4), std::invalid_argument);
}

TEST_CASE("5-point stencils are exact on cubics and NaN off the grid") {
    Grid g = make_grid(-1.0, 1.0, 64);
    Field f = make_field(g);
    for (int i = 0; i < g.n; ++i) {
        double z = g.z(i);
        f[i] = z * z * z;
    }
    int i = 30;
    double z = g.z(i);
    CHECK(d1_5pt(f, i, 1) == doctest::Approx(3.0 * z * z).epsilon(1e-11));
    CHECK(d2_5pt(f, i, 1) == doctest::Approx(6.0 * z).epsilon(1e-9));
    CHECK(d3_5pt(f, i, 1) == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(d1_5pt(f, i, 3) == doctest::Approx(3.0 * z * z).epsilon(1e-11));
    CHECK(std::isnan(d1_5pt(f, 1, 1)));
    CHECK(std::isnan(d2_5pt(f, 62, 1)));
    CHECK(std::isnan(d3_5pt(f, 30, 16)));
    CHECK(std::isnan(d1_5pt(f, 30, 0)));
}

TEST_CASE("cubic interpolation reproduces cubics") {
    Grid g = make_grid(-1.0, 3.0, 64);
    Field f = make_field(g);
    auto p = [](double z) { return 0.3 * z * z * z - z * z + 0.25 * z - 2.0; };
    for (int i = 0; i < g.n; ++i) f[i] = p(g.z(i));
    for (double x : {-0.987, 0.0, 0.5, 1.7321, 2.94})
        CHECK(interp_cubic(f, x) == doctest::Approx(p(x)).epsilon(1e-12));
    // restricted window clamps the stencil inside [lo, hi]
    CHECK(interp_cubic(f, g.z(10), 8, 12) == doctest::Approx(p(g.z(10))).epsilon(1e-12));
}

TEST_CASE("weight function and its admissibility cap") {
    CHECK(alpha_max() == doctest::Approx(2.0 - std::log(3.0) / std::log(2.0)).epsilon(1e-15));
    CHECK(alpha_max() == doctest::Approx(0.4150374992788438).epsilon(1e-14));
    Grid g = make_grid(-2.0, 2.0, 64);
    CHECK_THROWS_AS(weight_phi(g, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(weight_phi(g, 0.0, 0.0), std::invalid_argument);
    const double alpha = 0.4;
    const double zs = g.z(24);
    Field phi = weight_phi(g, zs, alpha);
    CHECK(phi[24] == 1.0);
    for (int i = 0; i < g.n; ++i) {
        double z = g.z(i);
        CHECK(phi[i] == doctest::Approx(std::pow(1.0 + std::fabs(z - zs), alpha)).epsilon(1e-14));
        // doubling inequality phi(z) <= 2^alpha phi(midpoint)
        double mid = std::pow(1.0 + 0.5 * std::fabs(z - zs), alpha);
        CHECK(phi[i] <= std::pow(2.0, alpha) * mid * (1.0 + 1e-14));
    }
}

TEST_CASE("field CSV round-trips exactly and writes deterministic bytes") {
    Grid g = make_grid(-1.5, 2.5, 32);
    Field f = make_field(g);
    for (int i = 0; i < g.n; ++i) f[i] = std::sin(3.0 * g.z(i)) / 3.0 + 1e-17;
    const std::string pa = "test_grid_rt_a.csv";
    const std::string pb = "test_grid_rt_b.csv";
    write_field_csv(pa, f);
    write_field_csv(pb, f);
    Field r = read_field_csv(pa);
    REQUIRE(r.n() == f.n());
    CHECK(r.grid.z_min == f.grid.z_min);
    CHECK(r.grid.z_max == f.grid.z_max);
    for (int i = 0; i < g.n; ++i) CHECK(r[i] == f[i]);

    auto slurp = [](const std::string& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    CHECK(slurp(pa) == slurp(pb));
    std::remove(pa.c_str());
    std::remove(pb.c_str());

    const std::string bad = "test_grid_bad.csv";
    {
        std::ofstream os(bad);
        os << "nope\n1,2\n";
    }
    CHECK_THROWS_AS(read_field_csv(bad), std::runtime_error);
    std::remove(bad.c_str());
}
