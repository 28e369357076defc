// Mortality m(z) with exact analytic derivatives through order 5, the
// normalized selection function M, and runtime structural-assumption checks.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "qgs/grid.hpp"

namespace qgs {

enum class SelectionKind { quadratic, polynomial, double_well };

struct ReferenceTrajectory;  // profiles.hpp

struct SelectionModel {
    SelectionKind kind = SelectionKind::quadratic;
    std::vector<double> coeffs;
    double z0 = 0.0;
    std::string description;

    // canonical monomial form: m(z) = sum_j mono[j] z^j, degree <= 8
    std::array<double, 9> mono{};
};

// quadratic:   coeffs = {c},        m(z) = c (z - z0)^2 / 2
// polynomial:  coeffs = {a0..ad},   m(z) = sum a_j (z - z0)^j, d <= 8
// double_well: coeffs = {a, b, c},  m(z) = a (z^2 - 1)^2 + b z + c
SelectionModel make_selection(SelectionKind kind, const std::vector<double>& coeffs,
                              double z0 = 0.0);

double eval_m(const SelectionModel& m, double z, int k = 0);

// M(z) = 1 + m(z) - m(z_star) - m'(z_star) (z - z_star)
double eval_M(const SelectionModel& m, double z_star, double z);

// Taylor coefficients about `center`: returns b with p(center + s) = sum b_j s^j
std::array<double, 9> recenter_poly(const std::array<double, 9>& mono, double center);

struct AssumptionReport {
    double inf_M = 0.0;
    std::array<double, 5> weighted_ratio_sup{};  // k = 1..5
    double a_estimate = 0.0;
    double a_margin = 0.0;            // 0.5 - a_estimate
    double midpoint_dM_ratio = 0.0;   // recorded only, no threshold exists
    bool cond_gamma = false;
    bool decay_gamma = false;
    bool superlinear = false;
    bool passed = false;              // conjunction of the three
};

// Samples M(t, z) over the trajectory horizon and the grid. Never throws on
// a failed assumption: failure is data (the critical-jump regime needs it).
AssumptionReport check_assumptions(const SelectionModel& m, const ReferenceTrajectory& traj,
                                   const Grid& g, double alpha);

}  // namespace qgs
