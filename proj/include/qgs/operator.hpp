// The mixing operator B_eps (direct O(n^2) and FFT backends), the residual
// functional I_eps, and the linearized operator T with its spectral probe.
#pragma once

#include <vector>

#include "qgs/grid.hpp"
#include "qgs/selection.hpp"

namespace qgs {

// 2D Gaussian rule for the weight e^{-Q}, Q = y1 y2 / 2 + 3 (y1^2 + y2^2)/4.
// Q diagonalizes to u^2 + v^2/2 under u = (y1+y2)/sqrt2, v = (y1-y2)/sqrt2;
// the rule is tensor Gauss-Hermite in (u, v) mapped back. Sum of weights is
// the Gaussian mass sqrt(2) pi.
struct QuadratureRule2D {
    std::vector<double> y1, y2, w;
    int order = 0;
};

QuadratureRule2D make_quadrature(int order = 40);

// nodes and weights for weight e^{-x^2}; sum of weights = sqrt(pi)
void gauss_hermite(int order, std::vector<double>& x, std::vector<double>& w);

double gauss2d_mass();  // sqrt(2) pi

enum class Backend { direct, fft };

// B_eps(f) = G_{eps/sqrt2} * hd  with  hd(u) = 2 (f*f)(2u) / ||f||_1.
// direct: O(n^2) summation (OpenMP over output cells; _serial is the
// reference kernel with identical summation order). fft: zero-pad to 2n so
// half-frequencies are native, then circular convolutions.
Field apply_B_direct(const Field& f, double eps);
Field apply_B_direct_serial(const Field& f, double eps);
Field apply_B_fft(const Field& f, double eps);
Field apply_B(const Field& f, double eps, Backend b);

// I_eps at (z_star, z): 2D integral of exp(2U(zbar) - U(zbar+eps y1) - U(zbar+eps y2))
// against e^{-Q}, over sqrt(pi) * integral of exp(-y^2/2 + U(z*) - U(z*+eps y)),
// with U(x) = q (x - z_star) + V(x). Equals 1 exactly at q=0, V=0.
// The pinning V(z*) = V'(z*) = 0 is the caller's normalization; constant
// offsets of V cancel identically, so it is not enforced here.
double eval_I_eps(double q, const Field& V, double eps, double z_star, double z,
                  const QuadratureRule2D& rule);

// T(R)(z) = M(z) (2 R(zbar) - R(z) - R(z_star)), midpoints by cubic interpolation
Field apply_T(const Field& R, const SelectionModel& m, double z_star);

// k-th derivative at z_star of T[(z - z_star)^k] divided by k!, k = 0..3;
// expected values (0, 0, -1/2, -3/4)
double spectral_check_T(const SelectionModel& m, double z_star, int k);

}  // namespace qgs
