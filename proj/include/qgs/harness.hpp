// Hopf-Cole decomposition of simulated states, corrector extraction, the
// weighted F-norm, and the eps-convergence sweep.
#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "qgs/config.hpp"
#include "qgs/grid.hpp"
#include "qgs/profiles.hpp"
#include "qgs/selection.hpp"
#include "qgs/solver.hpp"

namespace qgs {

struct Decomposition {
    double t = 0.0;
    double lambda_ref = 0.0;
    double p_eps = 0.0;
    double q_eps = 0.0;
    Field U_eps;     // NaN outside [win_lo, win_hi]
    Field V_eps;     // NaN outside [win_lo, win_hi]
    int win_lo = 0;  // inclusive range where density > 1e-12 max
    int win_hi = 0;
};

// E = eps^2 (log density + log_mass + log(eps sqrt(2 pi)));
// U = (lambda_ref(t) - (z - z*)^2/2 - E)/eps^2 with z*, lambda_ref from traj;
// p = U(z*) by cubic interpolation, q = dU(z*) by 5-point stencil rows
// interpolated at z*, V = U - p - q (z - z*) on the window.
// Requires strictly positive density on z* +- 10 eps.
Decomposition hopf_cole_decompose(const SimState& s, const ReferenceTrajectory& traj,
                                  const SelectionModel& model);

// kappa = (q_eps - q*(t))/eps^2;  W = (V_eps - V*(t, .))/eps^2 on the window
std::pair<double, Field> correctors(const Decomposition& d, const SelectionModel& model,
                                    const ReferenceTrajectory& traj, double eps);

struct FNormParts {
    double d1 = 0.0;      // sup |dW|
    double d2w = 0.0;     // sup phi |d2W|
    double d3w = 0.0;     // sup phi |d3W|
    double xi = 0.0;      // sup |2 W(zbar) - W(z)|
    double mid_d1 = 0.0;  // sup phi |dW(zbar) - dW(z)|
    double value = 0.0;   // max of the five
    int used_d2 = 0;      // rows surviving the h-refinement check
    int used_d3 = 0;
    int lo = 0, hi = 0;   // effective evaluation index range
};

// Five window sups of W around z_star; derivatives by 5-point stencils of
// spacing stride cells, refined against spacing 2*stride (disagreement above
// 10% discards the row), midpoints zbar = (z + z_star)/2 by cubic
// interpolation. The outermost 3*stride points of the window are excluded.
// lo/hi < 0 selects the maximal finite run of W containing z_star; explicit
// bounds restrict the evaluation (stencils may still read outside them).
// check_pinning = false skips the affine-contamination test, for synthetic
// fields that are deliberately not pinned.
FNormParts f_norm_parts(const Field& W, double z_star, double alpha, int stride = 1,
                        bool check_pinning = true, int lo = -1, int hi = -1);
double f_norm(const Field& W, double z_star, double alpha, int stride = 1,
              bool check_pinning = true);

struct SweepRow {
    double eps = 0.0;
    double sup_f_norm_w = 0.0;
    double sup_abs_kappa = 0.0;
    double sup_p_err_over_eps2 = 0.0;        // against the reference p* ODE
    double sup_v_err = 0.0;                  // sup_t sup_z |V_eps - V*|, common window
    double sup_p_half_drift_over_eps2 = 0.0; // against the half-curvature drift variant
    double sup_mean_shift_over_eps2 = 0.0;   // |mean - (z* - eps^2 q_eps)| / eps^2
    double sup_mass_rate_resid = 0.0;        // d/dt log_mass minus predicted rate
    double clamped_frac_max = 0.0;
    bool clamp_flag = false;
    bool passed = false;
    bool failed_run = false;
    std::string error;

    std::vector<double> times;
    std::vector<Decomposition> decomps;          // dt-extrapolated (Richardson pair)
    std::vector<Field> w_fields;
    std::vector<Field> vdiff_fields;             // |V_eps - V*|, NaN off-window
    std::vector<std::array<int, 2>> v_windows;   // per-t density > 1e-12 bounds
    std::vector<double> f_norm_series, kappa_series, p_err_series, v_err_series,
        mean_shift_series;
};

struct ConvergenceReport {
    std::vector<SweepRow> rows;   // decreasing eps
    double slope_v = 0.0;         // log-log fit of sup_v_err against eps
    double k_prime0 = 0.0;        // 1.5 x sup_p_err_over_eps2 of the coarsest row
    bool p_uniform = false;       // every row within k_prime0
    bool mean_trend_ok = false;   // mean-shift residual / eps^2 decreasing
    double t_end = 0.0;
    double snapshot_every = 0.0;
    double alpha = 0.0;
    std::string horizon_note;     // sups cover a finite horizon only
};

// Two solver runs per row (dt and dt/2, Richardson-extrapolated in time with
// dt_factor = min(0.08, 4 eps^2), overriding base.dt_factor), decomposed at
// every snapshot. Rows run concurrently; the V-error sup is taken on the
// common window shared by all rows so shrinking tails cannot fake the rate.
ConvergenceReport convergence_sweep(const RunConfig& base, const std::vector<double>& eps_list);

// header eps,sup_F_norm_W,sup_abs_kappa,sup_p_err_over_eps2,slope_V,passed
void write_report_csv(const std::string& path, const ConvergenceReport& rep);
// header z,U_eps,V_eps,W_eps over the decomposition window
void write_decomposition_csv(const std::string& path, const Decomposition& d, const Field& W);

}  // namespace qgs
