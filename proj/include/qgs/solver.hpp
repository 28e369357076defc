// Time integration of eps^2 df/dt + m f = B_eps(f): exponential integrating
// factor on the stiff mortality term, explicit mixing, overflow-safe mass
// ledger, boundary clamping, and snapshot recording.
#pragma once

#include <array>
#include <vector>

#include "qgs/grid.hpp"
#include "qgs/operator.hpp"
#include "qgs/profiles.hpp"
#include "qgs/selection.hpp"

namespace qgs {

struct SimState {
    double t = 0.0;
    Field density;       // normalized to mass 1
    double log_mass = 0.0;  // f_eps = e^{log_mass} * density
    double eps = 0.0;
};

struct SimOutput {
    std::vector<SimState> snapshots;
    std::vector<std::array<double, 2>> mass_series;  // (t, log_mass)
    std::vector<std::array<double, 2>> mode_series;  // (t, z_mode)
    double clamped_frac_max = 0.0;  // largest relative mass removed by the boundary clamp
    bool clamp_flag = false;        // true once clamped mass exceeds 1e-8 in any step
};

// f0 = (eps sqrt(2 pi))^-1 exp(-(z - z*(0))^2/(2 eps^2) - U*(0, z)), then
// normalized with the constant absorbed into log_mass. include_vstar=false
// drops the V* part of U* (exact Gaussian data; needed when V* has no
// positive dyadic ray, e.g. the deep double well).
SimState init_well_prepared(const SelectionModel& m, const ReferenceTrajectory& traj,
                            double eps, const Grid& g, bool include_vstar = true);

// one exponential-Euler step: with r = dt/eps^2,
//   f+ = e^{-m r} f + r phi1(-m r) B_eps(f),  phi1(x) = (e^x - 1)/x
// then 3-cell boundary clamp, renormalization, mass-factor into log_mass.
// clamped_frac, when given, receives the relative mass removed by the clamp.
SimState step(const SimState& s, const SelectionModel& m, double dt, Backend backend,
              double* clamped_frac = nullptr);

// stable near 0: series branch below |x| = 1e-5
double phi1(double x);

// quadratic fit of log density on 5 points around the argmax
double mode_logfit(const Field& density);

// integer snapshot scheduling: dt is snapped so that snapshot_every is an
// exact step multiple and the final time lands on t_end
SimOutput run(const SelectionModel& m, const ReferenceTrajectory& traj, double eps,
              const Grid& g, double t_end, double snapshot_every, double dt_factor = 0.1,
              Backend backend = Backend::fft, bool include_vstar = true);

}  // namespace qgs
