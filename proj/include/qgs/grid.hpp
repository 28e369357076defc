// Uniform trait-space lattice, sampled functions, finite differences,
// the weight (1+|z-z*|)^alpha, and CSV serialization.
#pragma once

#include <string>
#include <vector>

namespace qgs {

struct Grid {
    double z_min = 0.0;
    double z_max = 0.0;
    double h = 0.0;
    int n = 0;

    double z(int i) const { return z_min + i * h; }
};

// n must be a power of two >= 16; spacing h = (z_max - z_min)/(n - 1).
Grid make_grid(double z_min, double z_max, int n);

struct Field {
    Grid grid;
    std::vector<double> values;
    std::vector<std::string> notes;  // non-fatal warnings attached by operators

    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
    const double& operator[](int i) const { return values[static_cast<size_t>(i)]; }
    int n() const { return grid.n; }
};

Field make_field(const Grid& g, double fill = 0.0);

// sum(values)*h; endpoint values of compactly supported data are ~0 so the
// Riemann and trapezoid readings coincide to round-off
double field_mass(const Field& f);

// k in {1,2,3}: second-order central differences, one-sided second-order
// stencils at the boundary rows
Field derivative(const Field& f, int k);

double alpha_max();  // 2 - ln3/ln2
Field weight_phi(const Grid& g, double z_star, double alpha);

// 4-point Lagrange interpolation; stencil clamped to [lo, hi] node range
double interp_cubic(const Field& f, double x);
double interp_cubic(const Field& f, double x, int lo, int hi);

// strided five-point stencils, spacing s cells; NaN when the stencil
// leaves the grid
double d1_5pt(const Field& f, int i, int s);
double d2_5pt(const Field& f, int i, int s);
double d3_5pt(const Field& f, int i, int s);

// header "z,value", 17 significant digits
void write_field_csv(const std::string& path, const Field& f);
Field read_field_csv(const std::string& path);

}  // namespace qgs
