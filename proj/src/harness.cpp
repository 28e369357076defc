#include "qgs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <stdexcept>

namespace qgs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int argmax_index(const Field& f) {
    int imax = 0;
    for (int i = 1; i < f.n(); ++i)
        if (f[i] > f[imax]) imax = i;
    return imax;
}

// contiguous run around the argmax where f > frac * max
std::array<int, 2> floor_window(const Field& f, double frac) {
    const int imax = argmax_index(f);
    const double floor = frac * f[imax];
    int lo = imax, hi = imax;
    while (lo > 0 && f[lo - 1] > floor) --lo;
    while (hi < f.n() - 1 && f[hi + 1] > floor) ++hi;
    return {lo, hi};
}

double keep_refined(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) return kNaN;
    if (std::abs(a - b) > 0.1 * std::max(std::abs(a), std::abs(b))) return kNaN;
    return a;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2) return kNaN;
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return den > 0.0 ? num / den : kNaN;
}

double field_mean(const Field& f) {
    double s = 0.0;
    for (int i = 0; i < f.n(); ++i) s += f.grid.z(i) * f[i];
    return s * f.grid.h;
}

}  // namespace

Decomposition hopf_cole_decompose(const SimState& s, const ReferenceTrajectory& traj,
                                  const SelectionModel&) {
    const double eps = s.eps;
    const Field& f = s.density;
    const Grid& g = f.grid;
    const TrajSample ts = traj_at(traj, s.t);

    const int imax = argmax_index(f);
    int plo = imax, phi = imax;
    while (plo > 0 && f[plo - 1] > 0.0) --plo;
    while (phi < g.n - 1 && f[phi + 1] > 0.0) ++phi;
    const double need_lo = ts.z_star - 10.0 * eps;
    const double need_hi = ts.z_star + 10.0 * eps;
    // the strictly positive run around the mode must cover z* +- 10 eps or
    // end below the 1e-12 analysis floor (round-off tails of the spectral
    // backend flip sign out there); a run cut while still carrying
    // meaningful density means clamped or truncated support
    const double floor = 1e-12 * f[imax];
    const bool ok_lo = g.z(plo) <= need_lo + 1e-9 || f[plo] <= floor;
    const bool ok_hi = g.z(phi) >= need_hi - 1e-9 || f[phi] <= floor;
    if (!ok_lo || !ok_hi) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "hopf_cole_decompose: insufficient support at t = %.6g: density "
                      "positive on [%.6g, %.6g] but z* +- 10 eps = [%.6g, %.6g]",
                      s.t, g.z(plo), g.z(phi), need_lo, need_hi);
        throw std::runtime_error(buf);
    }

    Decomposition d;
    d.t = s.t;
    d.lambda_ref = ts.lambda;
    const auto win = floor_window(f, 1e-12);
    d.win_lo = win[0];
    d.win_hi = win[1];

    d.U_eps = make_field(g, kNaN);
    const double log_norm = std::log(eps * std::sqrt(2.0 * M_PI));
    for (int i = d.win_lo; i <= d.win_hi; ++i) {
        const double E = eps * eps * (std::log(f[i]) + s.log_mass + log_norm);
        const double dz = g.z(i) - ts.z_star;
        d.U_eps[i] = (ts.lambda - 0.5 * dz * dz - E) / (eps * eps);
    }

    Field dU = make_field(g, kNaN);
    for (int i = d.win_lo + 2; i <= d.win_hi - 2; ++i) dU[i] = d1_5pt(d.U_eps, i, 1);

    d.p_eps = interp_cubic(d.U_eps, ts.z_star, d.win_lo, d.win_hi);
    d.q_eps = interp_cubic(dU, ts.z_star, d.win_lo + 2, d.win_hi - 2);

    d.V_eps = make_field(g, kNaN);
    for (int i = d.win_lo; i <= d.win_hi; ++i)
        d.V_eps[i] = d.U_eps[i] - d.p_eps - d.q_eps * (g.z(i) - ts.z_star);
    return d;
}

std::pair<double, Field> correctors(const Decomposition& d, const SelectionModel& model,
                                    const ReferenceTrajectory& traj, double eps) {
    const TrajSample ts = traj_at(traj, d.t);
    const double kappa = (d.q_eps - ts.q_star) / (eps * eps);
    Field W = make_field(d.V_eps.grid, kNaN);
    for (int i = d.win_lo; i <= d.win_hi; ++i)
        W[i] = (d.V_eps[i] - v_star(model, ts.z_star, d.V_eps.grid.z(i))) / (eps * eps);
    return {kappa, W};
}

FNormParts f_norm_parts(const Field& W, double z_star, double alpha, int stride,
                        bool check_pinning, int lo, int hi) {
    const Grid& g = W.grid;
    const int n = g.n;
    const int s = std::max(1, stride);

    int iz = static_cast<int>(std::lround((z_star - g.z_min) / g.h));
    iz = std::clamp(iz, 0, n - 1);
    if (lo < 0 || hi < 0) {
        if (!std::isfinite(W[iz]))
            throw std::runtime_error("f_norm: W is undefined at z_star");
        lo = iz;
        hi = iz;
        while (lo > 0 && std::isfinite(W[lo - 1])) --lo;
        while (hi < n - 1 && std::isfinite(W[hi + 1])) ++hi;
    }
    if (iz - lo < 10 || hi - iz < 10)
        throw std::runtime_error(
            "f_norm: window too small: need at least 10 points on each side of z_star");

    Field d1 = make_field(g, kNaN);
    for (int i = 0; i < n; ++i) d1[i] = d1_5pt(W, i, s);

    if (check_pinning) {
        // contamination is judged with the unit-stride stencil that defined the
        // affine part; a coarse stride adds its own h^4 term and trips the check
        Field d1p = make_field(g, kNaN);
        for (int i = 0; i < n; ++i) d1p[i] = d1_5pt(W, i, 1);
        const double w0 = interp_cubic(W, z_star);
        const double dw0 = interp_cubic(d1p, z_star);
        if (!(std::abs(w0) <= 1e-6) || !(std::abs(dw0) <= 1e-6)) {
            char buf[120];
            std::snprintf(buf, sizeof buf,
                          "f_norm: pinning violation: W(z*) = %.3e, dW(z*) = %.3e", w0, dw0);
            throw std::runtime_error(buf);
        }
    }

    Field d2 = make_field(g, kNaN), d3 = make_field(g, kNaN);
    for (int i = 0; i < n; ++i) {
        d2[i] = keep_refined(d2_5pt(W, i, s), d2_5pt(W, i, 2 * s));
        d3[i] = keep_refined(d3_5pt(W, i, s), d3_5pt(W, i, 2 * s));
    }

    const Field phi = weight_phi(g, z_star, alpha);
    FNormParts parts;
    parts.lo = lo + 3 * s;
    parts.hi = hi - 3 * s;
    for (int i = parts.lo; i <= parts.hi; ++i) {
        if (std::isfinite(d1[i])) parts.d1 = std::max(parts.d1, std::abs(d1[i]));
        if (std::isfinite(d2[i])) {
            parts.d2w = std::max(parts.d2w, phi[i] * std::abs(d2[i]));
            ++parts.used_d2;
        }
        if (std::isfinite(d3[i])) {
            parts.d3w = std::max(parts.d3w, phi[i] * std::abs(d3[i]));
            ++parts.used_d3;
        }
        const double zb = 0.5 * (g.z(i) + z_star);
        const double wb = interp_cubic(W, zb);
        const double dwb = interp_cubic(d1, zb);
        if (std::isfinite(wb) && std::isfinite(W[i]))
            parts.xi = std::max(parts.xi, std::abs(2.0 * wb - W[i]));
        if (std::isfinite(dwb) && std::isfinite(d1[i]))
            parts.mid_d1 = std::max(parts.mid_d1, phi[i] * std::abs(dwb - d1[i]));
    }
    parts.value = std::max({parts.d1, parts.d2w, parts.d3w, parts.xi, parts.mid_d1});
    return parts;
}

double f_norm(const Field& W, double z_star, double alpha, int stride, bool check_pinning) {
    return f_norm_parts(W, z_star, alpha, stride, check_pinning).value;
}

namespace {

// reference p with the half-curvature drift, quadrature over the trajectory
std::vector<double> half_drift_p(const SelectionModel& m, const ReferenceTrajectory& traj) {
    std::vector<double> pc(traj.times.size());
    pc[0] = traj.p_star.empty() ? 0.0 : traj.p_star[0];
    auto rate = [&](double t) {
        const TrajSample s = traj_at(traj, t);
        return -eval_m(m, s.z_star, 1) * s.q_star + 0.5 * eval_m(m, s.z_star, 2);
    };
    for (size_t k = 0; k + 1 < traj.times.size(); ++k) {
        const double t = traj.times[k];
        const double dt = traj.times[k + 1] - t;
        pc[k + 1] = pc[k] + dt / 6.0 * (rate(t) + 4.0 * rate(t + 0.5 * dt) + rate(t + dt));
    }
    return pc;
}

double traj_node_value(const ReferenceTrajectory& traj, const std::vector<double>& series,
                       double t) {
    const auto k = static_cast<size_t>(std::lround(t / traj.dt));
    if (k >= series.size() || std::abs(traj.times[k] - t) > 1e-9)
        throw std::runtime_error("convergence_sweep: snapshot time off the trajectory lattice");
    return series[k];
}

}  // namespace

ConvergenceReport convergence_sweep(const RunConfig& base, const std::vector<double>& eps_list) {
    if (eps_list.empty())
        throw std::invalid_argument("convergence_sweep: empty eps list");
    for (size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw std::invalid_argument("convergence_sweep: eps entries must be > 0");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("convergence_sweep: eps list must be decreasing");
    }

    const Grid g = make_grid(base.zmin, base.zmax, base.n);
    for (double eps : eps_list)
        if (g.h > eps / 4.0 * (1.0 + 1e-12))
            throw std::invalid_argument("convergence_sweep: grid spacing " + std::to_string(g.h) +
                                        " does not resolve eps = " + std::to_string(eps) +
                                        "; need h <= eps/4");

    const SelectionModel m = selection_from(base);
    const double snap = base.snapshot_every;
    const double traj_dt = snap / std::ceil(snap / 1e-3);
    const ReferenceTrajectory traj =
        evolve_reference(m, base.z_star0, base.q0, base.p0, base.lambda0, base.t_end, traj_dt);
    const std::vector<double> pc = half_drift_p(m, traj);

    auto worker = [&](double eps) {
        SweepRow row;
        row.eps = eps;
        row.sup_f_norm_w = row.sup_abs_kappa = row.sup_p_err_over_eps2 = kNaN;
        row.sup_v_err = row.sup_p_half_drift_over_eps2 = kNaN;
        row.sup_mean_shift_over_eps2 = row.sup_mass_rate_resid = kNaN;

        // dt-refinement pair: half step doubles the cost, Richardson removes
        // the O(dt) scheme error which otherwise swamps the eps^2 signal
        const double dtf = std::min(0.08, 4.0 * eps * eps);
        const SimOutput full = run(m, traj, eps, g, base.t_end, snap, dtf, base.backend,
                                   base.init_vstar);
        const SimOutput half = run(m, traj, eps, g, base.t_end, snap, dtf / 2.0, base.backend,
                                   base.init_vstar);
        row.clamped_frac_max = std::max(full.clamped_frac_max, half.clamped_frac_max);
        row.clamp_flag = full.clamp_flag || half.clamp_flag;

        const int stride = std::max(1, static_cast<int>(std::lround(0.03 / g.h)));
        const size_t nt = full.snapshots.size();
        double sup_fn = 0.0, sup_k = 0.0, sup_p = 0.0, sup_pc = 0.0, sup_ms = 0.0;
        for (size_t it = 0; it < nt; ++it) {
            const SimState& sf = full.snapshots[it];
            const SimState& sh = half.snapshots[it];
            const double t = sf.t;
            const TrajSample ts = traj_at(traj, t);

            const Decomposition df = hopf_cole_decompose(sf, traj, m);
            const Decomposition dh = hopf_cole_decompose(sh, traj, m);
            Decomposition dc;
            dc.t = t;
            dc.lambda_ref = df.lambda_ref;
            dc.p_eps = 2.0 * dh.p_eps - df.p_eps;
            dc.q_eps = 2.0 * dh.q_eps - df.q_eps;
            dc.win_lo = std::max(df.win_lo, dh.win_lo);
            dc.win_hi = std::min(df.win_hi, dh.win_hi);
            dc.U_eps = make_field(g, kNaN);
            dc.V_eps = make_field(g, kNaN);
            for (int i = dc.win_lo; i <= dc.win_hi; ++i) {
                dc.U_eps[i] = 2.0 * dh.U_eps[i] - df.U_eps[i];
                dc.V_eps[i] = 2.0 * dh.V_eps[i] - df.V_eps[i];
            }

            auto [kappa, W] = correctors(dc, m, traj, eps);

            Field vdiff = make_field(g, kNaN);
            for (int i = dc.win_lo; i <= dc.win_hi; ++i)
                vdiff[i] = std::abs(dc.V_eps[i] - v_star(m, ts.z_star, g.z(i)));

            const auto w6 = floor_window(sh.density, 1e-6);
            const auto w12 = floor_window(sh.density, 1e-12);
            const double fn =
                f_norm_parts(W, ts.z_star, base.alpha, stride, true, w6[0] + 3, w6[1] - 3)
                    .value;

            const double p_err = std::abs(dc.p_eps - ts.p_star) / (eps * eps);
            const double pc_err =
                std::abs(dc.p_eps - traj_node_value(traj, pc, t)) / (eps * eps);
            const double mean = 2.0 * field_mean(sh.density) - field_mean(sf.density);
            const double ms =
                std::abs(mean - (ts.z_star - eps * eps * dc.q_eps)) / (eps * eps);

            sup_fn = std::max(sup_fn, fn);
            sup_k = std::max(sup_k, std::abs(kappa));
            sup_p = std::max(sup_p, p_err);
            sup_pc = std::max(sup_pc, pc_err);
            sup_ms = std::max(sup_ms, ms);

            row.times.push_back(t);
            row.decomps.push_back(std::move(dc));
            row.w_fields.push_back(std::move(W));
            row.vdiff_fields.push_back(std::move(vdiff));
            row.v_windows.push_back({w12[0] + 3, w12[1] - 3});
            row.f_norm_series.push_back(fn);
            row.kappa_series.push_back(kappa);
            row.p_err_series.push_back(p_err);
            row.mean_shift_series.push_back(ms);
        }

        // mass-rate residual per snapshot interval: the exact lambda_ref
        // increment cancels the stiff part, so the remainder is the
        // correction terms plus the scheme error
        double sup_mr = 0.0;
        for (size_t k = 0; k + 1 < nt; ++k) {
            const double t0 = full.mass_series[k][0], t1 = full.mass_series[k + 1][0];
            const double lm0 = 2.0 * half.mass_series[k][1] - full.mass_series[k][1];
            const double lm1 = 2.0 * half.mass_series[k + 1][1] - full.mass_series[k + 1][1];
            const TrajSample a = traj_at(traj, t0), b = traj_at(traj, t1);
            const TrajSample mid = traj_at(traj, 0.5 * (t0 + t1));
            const double qmid = 0.5 * (row.decomps[k].q_eps + row.decomps[k + 1].q_eps);
            const double expected = (b.lambda - a.lambda) / ((t1 - t0) * eps * eps) +
                                    qmid * eval_m(m, mid.z_star, 1) -
                                    0.5 * eval_m(m, mid.z_star, 2);
            sup_mr = std::max(sup_mr, std::abs((lm1 - lm0) / (t1 - t0) - expected));
        }

        row.sup_f_norm_w = sup_fn;
        row.sup_abs_kappa = sup_k;
        row.sup_p_err_over_eps2 = sup_p;
        row.sup_p_half_drift_over_eps2 = sup_pc;
        row.sup_mean_shift_over_eps2 = sup_ms;
        row.sup_mass_rate_resid = sup_mr;
        return row;
    };

    std::vector<std::future<SweepRow>> futs;
    futs.reserve(eps_list.size());
    for (double eps : eps_list) futs.push_back(std::async(std::launch::async, worker, eps));

    ConvergenceReport rep;
    rep.t_end = base.t_end;
    rep.snapshot_every = snap;
    rep.alpha = base.alpha;
    {
        char buf[120];
        std::snprintf(buf, sizeof buf,
                      "sups taken over snapshots t in [0, %.6g]; no claim beyond the horizon",
                      base.t_end);
        rep.horizon_note = buf;
    }
    for (size_t i = 0; i < eps_list.size(); ++i) {
        try {
            rep.rows.push_back(futs[i].get());
        } catch (const std::exception& e) {
            SweepRow row;
            row.eps = eps_list[i];
            row.failed_run = true;
            row.error = e.what();
            row.sup_f_norm_w = row.sup_abs_kappa = row.sup_p_err_over_eps2 = kNaN;
            row.sup_v_err = row.sup_p_half_drift_over_eps2 = kNaN;
            row.sup_mean_shift_over_eps2 = row.sup_mass_rate_resid = kNaN;
            rep.rows.push_back(std::move(row));
        }
    }

    // V-error on the window common to every successful row, per snapshot
    size_t nt = 0;
    for (const auto& r : rep.rows)
        if (!r.failed_run) nt = std::max(nt, r.times.size());
    for (size_t it = 0; it < nt; ++it) {
        int lo_c = 0, hi_c = 1 << 30;
        for (const auto& r : rep.rows)
            if (!r.failed_run && it < r.v_windows.size()) {
                lo_c = std::max(lo_c, r.v_windows[it][0]);
                hi_c = std::min(hi_c, r.v_windows[it][1]);
            }
        for (auto& r : rep.rows) {
            if (r.failed_run || it >= r.vdiff_fields.size()) continue;
            double ve = 0.0;
            bool any = false;
            for (int i = lo_c; i <= hi_c; ++i)
                if (std::isfinite(r.vdiff_fields[it][i])) {
                    ve = std::max(ve, r.vdiff_fields[it][i]);
                    any = true;
                }
            r.v_err_series.push_back(any ? ve : kNaN);
        }
    }
    for (auto& r : rep.rows) {
        if (r.failed_run) continue;
        double sup = 0.0;
        bool any = false;
        for (double v : r.v_err_series)
            if (std::isfinite(v)) {
                sup = std::max(sup, v);
                any = true;
            }
        r.sup_v_err = any ? sup : kNaN;
    }

    std::vector<double> lx, ly;
    for (const auto& r : rep.rows)
        if (!r.failed_run && std::isfinite(r.sup_v_err) && r.sup_v_err > 0.0) {
            lx.push_back(std::log(r.eps));
            ly.push_back(std::log(r.sup_v_err));
        }
    rep.slope_v = fit_slope(lx, ly);

    const SweepRow* prev = nullptr;
    for (auto& r : rep.rows) {
        if (r.failed_run) {
            r.passed = false;
            continue;
        }
        bool ok = std::isfinite(r.sup_f_norm_w) && std::isfinite(r.sup_abs_kappa);
        if (ok && prev) {
            const double rf = r.sup_f_norm_w / prev->sup_f_norm_w;
            const double rk = r.sup_abs_kappa / prev->sup_abs_kappa;
            ok = rf >= 0.6 && rf <= 1.3 && rk >= 0.6 && rk <= 1.3;
        }
        r.passed = ok;
        prev = &r;
    }

    if (!rep.rows.empty() && !rep.rows.front().failed_run &&
        std::isfinite(rep.rows.front().sup_p_err_over_eps2)) {
        rep.k_prime0 = 1.5 * rep.rows.front().sup_p_err_over_eps2;
        rep.p_uniform = true;
        for (const auto& r : rep.rows)
            if (r.failed_run || !(r.sup_p_err_over_eps2 <= rep.k_prime0))
                rep.p_uniform = false;
    } else {
        rep.k_prime0 = kNaN;
        rep.p_uniform = false;
    }

    rep.mean_trend_ok = true;
    prev = nullptr;
    for (const auto& r : rep.rows) {
        if (r.failed_run || !std::isfinite(r.sup_mean_shift_over_eps2)) {
            rep.mean_trend_ok = false;
            break;
        }
        if (prev && !(r.sup_mean_shift_over_eps2 < prev->sup_mean_shift_over_eps2))
            rep.mean_trend_ok = false;
        prev = &r;
    }
    return rep;
}

void write_report_csv(const std::string& path, const ConvergenceReport& rep) {
    FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_report_csv: cannot open " + path);
    std::fprintf(fp, "eps,sup_F_norm_W,sup_abs_kappa,sup_p_err_over_eps2,slope_V,passed\n");
    for (const auto& r : rep.rows)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.eps, r.sup_f_norm_w,
                     r.sup_abs_kappa, r.sup_p_err_over_eps2, rep.slope_v, r.passed ? 1 : 0);
    std::fclose(fp);
}

void write_decomposition_csv(const std::string& path, const Decomposition& d, const Field& W) {
    FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_decomposition_csv: cannot open " + path);
    std::fprintf(fp, "z,U_eps,V_eps,W_eps\n");
    for (int i = d.win_lo; i <= d.win_hi; ++i)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", d.U_eps.grid.z(i), d.U_eps[i], d.V_eps[i],
                     W[i]);
    std::fclose(fp);
}

}  // namespace qgs
