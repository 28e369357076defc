#include "qgs/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qgs {

static bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Grid make_grid(double z_min, double z_max, int n) {
    if (!(z_min < z_max))
        throw std::invalid_argument("make_grid: empty interval [" + std::to_string(z_min) +
                                    ", " + std::to_string(z_max) + "]");
    if (n < 16 || !power_of_two(n))
        throw std::invalid_argument("make_grid: n must be a power of two >= 16, got " +
                                    std::to_string(n));
    Grid g;
    g.z_min = z_min;
    g.z_max = z_max;
    g.n = n;
    g.h = (z_max - z_min) / (n - 1);
    return g;
}

Field make_field(const Grid& g, double fill) {
    Field f;
    f.grid = g;
    f.values.assign(static_cast<size_t>(g.n), fill);
    return f;
}

double field_mass(const Field& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.grid.h;
}

Field derivative(const Field& f, int k) {
    if (k < 1 || k > 3)
        throw std::invalid_argument("derivative: unsupported order " + std::to_string(k));
    const int n = f.n();
    const double h = f.grid.h;
    Field out = make_field(f.grid);
    const auto& v = f.values;

    if (k == 1) {
        const double c = 1.0 / (2.0 * h);
        out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * c;
        for (int i = 1; i < n - 1; ++i) out[i] = (v[i + 1] - v[i - 1]) * c;
        out[n - 1] = (v[n - 3] - 4.0 * v[n - 2] + 3.0 * v[n - 1]) * c;
    } else if (k == 2) {
        const double c = 1.0 / (h * h);
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * c;
        for (int i = 1; i < n - 1; ++i) out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * c;
        out[n - 1] = (-v[n - 4] + 4.0 * v[n - 3] - 5.0 * v[n - 2] + 2.0 * v[n - 1]) * c;
    } else {
        const double c = 1.0 / (h * h * h);
        out[0] = (-2.5 * v[0] + 9.0 * v[1] - 12.0 * v[2] + 7.0 * v[3] - 1.5 * v[4]) * c;
        out[1] = (-1.5 * v[0] + 5.0 * v[1] - 6.0 * v[2] + 3.0 * v[3] - 0.5 * v[4]) * c;
        for (int i = 2; i < n - 2; ++i)
            out[i] = (-v[i - 2] + 2.0 * v[i - 1] - 2.0 * v[i + 1] + v[i + 2]) * (0.5 * c);
        out[n - 2] = (0.5 * v[n - 5] - 3.0 * v[n - 4] + 6.0 * v[n - 3] - 5.0 * v[n - 2] +
                      1.5 * v[n - 1]) * c;
        out[n - 1] = (1.5 * v[n - 5] - 7.0 * v[n - 4] + 12.0 * v[n - 3] - 9.0 * v[n - 2] +
                      2.5 * v[n - 1]) * c;
    }
    return out;
}

double alpha_max() { return 2.0 - std::log(3.0) / std::log(2.0); }

Field weight_phi(const Grid& g, double z_star, double alpha) {
    if (!(alpha > 0.0) || !(alpha < alpha_max()))
        throw std::invalid_argument("weight_phi: alpha must lie in (0, " +
                                    std::to_string(alpha_max()) + "), got " +
                                    std::to_string(alpha));
    Field f = make_field(g);
    for (int i = 0; i < g.n; ++i)
        f[i] = std::pow(1.0 + std::fabs(g.z(i) - z_star), alpha);
    return f;
}

double interp_cubic(const Field& f, double x, int lo, int hi) {
    const Grid& g = f.grid;
    int ii = static_cast<int>(std::floor((x - g.z_min) / g.h));
    if (ii < lo + 1) ii = lo + 1;
    if (ii > hi - 2) ii = hi - 2;
    double p = 0.0;
    for (int a = ii - 1; a <= ii + 2; ++a) {
        double L = 1.0;
        for (int b = ii - 1; b <= ii + 2; ++b) {
            if (a == b) continue;
            L *= (x - g.z(b)) / (g.z(a) - g.z(b));
        }
        p += f[a] * L;
    }
    return p;
}

double interp_cubic(const Field& f, double x) { return interp_cubic(f, x, 0, f.n() - 1); }

static bool stencil_ok(const Field& f, int i, int s) {
    return s >= 1 && i - 2 * s >= 0 && i + 2 * s < f.n();
}

double d1_5pt(const Field& f, int i, int s) {
    if (!stencil_ok(f, i, s)) return std::numeric_limits<double>::quiet_NaN();
    const double d = 12.0 * s * f.grid.h;
    return (f[i - 2 * s] - 8.0 * f[i - s] + 8.0 * f[i + s] - f[i + 2 * s]) / d;
}

double d2_5pt(const Field& f, int i, int s) {
    if (!stencil_ok(f, i, s)) return std::numeric_limits<double>::quiet_NaN();
    const double hs = s * f.grid.h;
    return (-f[i - 2 * s] + 16.0 * f[i - s] - 30.0 * f[i] + 16.0 * f[i + s] - f[i + 2 * s]) /
           (12.0 * hs * hs);
}

double d3_5pt(const Field& f, int i, int s) {
    if (!stencil_ok(f, i, s)) return std::numeric_limits<double>::quiet_NaN();
    const double hs = s * f.grid.h;
    return (-f[i - 2 * s] + 2.0 * f[i - s] - 2.0 * f[i + s] + f[i + 2 * s]) /
           (2.0 * hs * hs * hs);
}

void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_field_csv: cannot open " + path);
    os << "z,value\n";
    char buf[80];
    for (int i = 0; i < f.n(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.grid.z(i), f[i]);
        os << buf;
    }
    if (!os) throw std::runtime_error("write_field_csv: write failed for " + path);
}

Field read_field_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_field_csv: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("z,value", 0) != 0)
        throw std::runtime_error("read_field_csv: missing z,value header in " + path);
    std::vector<double> zs, vs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("read_field_csv: malformed row in " + path);
        zs.push_back(std::stod(line.substr(0, comma)));
        vs.push_back(std::stod(line.substr(comma + 1)));
    }
    if (zs.size() < 2) throw std::runtime_error("read_field_csv: too few rows in " + path);
    const int n = static_cast<int>(zs.size());
    Grid g = make_grid(zs.front(), zs.back(), n);
    Field f = make_field(g);
    f.values = vs;
    return f;
}

}  // namespace qgs
