// Reference asymptotic objects: the trajectory (z*, lambda, q*, p*), the
// log-series V*, its derivative identities, and the assembled limit shape U*.
#pragma once

#include <utility>
#include <vector>

#include "qgs/selection.hpp"

namespace qgs {

struct ReferenceTrajectory {
    std::vector<double> times;
    std::vector<double> z_star;
    std::vector<double> lambda;
    std::vector<double> q_star;
    std::vector<double> p_star;
    double dt = 0.0;
};

struct TrajSample {
    double z_star, lambda, q_star, p_star;
};

// node read when t is within 1e-9 of a sample time, linear between nodes
TrajSample traj_at(const ReferenceTrajectory& traj, double t);

// RK4 on  z*' = -m'(z*);  lambda' = 1 - m(z*);
//         q*' = -m''(z*) q* + m'''(z*)/2 - 2 m''(z*) m'(z*);
//         p*' = -m'(z*) q* + m''(z*)
ReferenceTrajectory evolve_reference(const SelectionModel& m, double z0, double q0,
                                     double p0, double lambda0, double t_end, double dt);

// sum_k 2^k log M(z* + 2^-k (z - z*)); truncated when |term| < tol and k >= 8,
// hard cap 60 terms. The dyadic argument is recentred exactly through the
// polynomial Taylor shift, so no 2^k round-off amplification occurs.
double v_star(const SelectionModel& m, double z_star, double z, double tol = 1e-12);

// relative FD errors of d2 V*(z*) against 2 m''(z*) and d3 V*(z*) against
// (4/3) m'''(z*); absolute error where the target vanishes
std::pair<double, double> check_vstar_identities(const SelectionModel& m, double z_star,
                                                 double h = 2.5e-4);

double u_star(const SelectionModel& m, const ReferenceTrajectory& traj, double t, double z);

void write_trajectory_csv(const std::string& path, const ReferenceTrajectory& traj);

}  // namespace qgs
