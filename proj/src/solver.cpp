#include "qgs/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qgs {

double phi1(double x) {
    if (std::fabs(x) > 1e-5) return std::expm1(x) / x;
    return 1.0 + 0.5 * x + x * x / 6.0;
}

SimState init_well_prepared(const SelectionModel& m, const ReferenceTrajectory& traj,
                            double eps, const Grid& g, bool include_vstar) {
    if (g.h > eps / 8.0)
        throw std::invalid_argument("init_well_prepared: grid too coarse, need h <= eps/8 (h = " +
                                    std::to_string(g.h) + ", eps = " + std::to_string(eps) + ")");
    const TrajSample s0 = traj_at(traj, traj.times.front());
    const double zs = s0.z_star;
    if (zs - 6.0 * eps < g.z_min || zs + 6.0 * eps > g.z_max)
        throw std::invalid_argument("init_well_prepared: z*(0) = " + std::to_string(zs) +
                                    " needs a 6 eps margin inside [" + std::to_string(g.z_min) +
                                    ", " + std::to_string(g.z_max) + "]");

    SimState st;
    st.t = traj.times.front();
    st.eps = eps;
    st.density = make_field(g);
    const double amp = 1.0 / (eps * std::sqrt(2.0 * M_PI));
    for (int i = 0; i < g.n; ++i) {
        const double dz = g.z(i) - zs;
        double u = s0.p_star + s0.q_star * dz;
        if (include_vstar) u += v_star(m, zs, g.z(i));
        st.density[i] = amp * std::exp(-0.5 * dz * dz / (eps * eps) - u);
    }
    const double mass = field_mass(st.density);
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::invalid_argument("init_well_prepared: initial data has no mass on the grid");
    for (int i = 0; i < g.n; ++i) st.density[i] /= mass;
    st.log_mass = std::log(mass);
    return st;
}

SimState step(const SimState& s, const SelectionModel& m, double dt, Backend backend,
              double* clamped_frac) {
    const double eps = s.eps;
    const double dt_max = 0.2 * eps * eps;
    if (dt > dt_max * (1.0 + 1e-12))
        throw std::invalid_argument("step: dt = " + std::to_string(dt) +
                                    " exceeds stability bound 0.2 eps^2 = " +
                                    std::to_string(dt_max));

    const double r = dt / (eps * eps);
    const Field B = apply_B(s.density, eps, backend);

    SimState out;
    out.eps = eps;
    out.t = s.t + dt;
    out.density = make_field(s.density.grid);
    const int n = s.density.n();
    for (int i = 0; i < n; ++i) {
        const double mr = eval_m(m, s.density.grid.z(i)) * r;
        out.density[i] = std::exp(-mr) * s.density[i] + r * phi1(-mr) * B[i];
    }

    // boundary clamp, 3 cells per side; the model lives on R and the window
    // must hold the support, so removed mass is tracked as a validity signal
    double clamped = 0.0;
    for (int i = 0; i < 3; ++i) {
        clamped += out.density[i] + out.density[n - 1 - i];
        out.density[i] = 0.0;
        out.density[n - 1 - i] = 0.0;
    }

    const double mass = field_mass(out.density);
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::runtime_error("step: divergence at t = " + std::to_string(out.t) +
                                 " (mass = " + std::to_string(mass) + ")");
    double mn = 0.0, mx = 0.0;
    for (int i = 0; i < n; ++i) {
        out.density[i] /= mass;
        if (!std::isfinite(out.density[i]))
            throw std::runtime_error("step: divergence (non-finite density) at t = " +
                                     std::to_string(out.t));
        mn = std::min(mn, out.density[i]);
        mx = std::max(mx, out.density[i]);
    }
    // positivity floor: healthy runs sit at the roundoff level, ~1e-16 of the
    // peak; a deep negative means a selection pocket is amplifying the fft
    // backend's sign-indefinite noise and the run is garbage from here on
    if (mn < -1e-12 * mx)
        throw std::runtime_error("step: positivity lost at t = " + std::to_string(out.t) +
                                 " (min/max = " + std::to_string(mn / mx) +
                                 "); rerun with the direct backend");
    out.log_mass = s.log_mass + std::log(mass);
    if (clamped_frac) *clamped_frac = clamped * s.density.grid.h;
    return out;
}

double mode_logfit(const Field& density) {
    const int n = density.n();
    int imax = 0;
    for (int i = 1; i < n; ++i)
        if (density[i] > density[imax]) imax = i;
    if (imax < 2) imax = 2;
    if (imax > n - 3) imax = n - 3;

    // least-squares parabola through log density at imax-2 .. imax+2
    double y[5];
    for (int j = -2; j <= 2; ++j)
        y[j + 2] = std::log(std::max(density[imax + j], 1e-300));
    const double h = density.grid.h;
    const double b = (-2.0 * y[0] - y[1] + y[3] + 2.0 * y[4]) / (10.0 * h);
    const double a2 = (2.0 * y[0] - y[1] - 2.0 * y[2] - y[3] + 2.0 * y[4]) / (14.0 * h * h);
    if (!(a2 < 0.0)) return density.grid.z(imax);
    return density.grid.z(imax) - 0.5 * b / a2;
}

SimOutput run(const SelectionModel& m, const ReferenceTrajectory& traj, double eps,
              const Grid& g, double t_end, double snapshot_every, double dt_factor,
              Backend backend, bool include_vstar) {
    if (!(snapshot_every > 0.0) || !(t_end >= snapshot_every))
        throw std::invalid_argument("run: need 0 < snapshot_every <= t_end");
    if (traj.times.back() < t_end - 1e-9)
        throw std::invalid_argument("run: trajectory covers t <= " +
                                    std::to_string(traj.times.back()) +
                                    ", run needs t_end = " + std::to_string(t_end));

    // snap dt to an integer divisor of the snapshot interval so snapshot
    // times are exact multiples and the final snapshot lands on t_end
    const double dt_raw = dt_factor * eps * eps;
    long stride = std::lround(snapshot_every / dt_raw);
    if (stride < 1) stride = 1;
    const double dt = snapshot_every / static_cast<double>(stride);
    if (dt > 0.2 * eps * eps * (1.0 + 1e-12))
        throw std::invalid_argument("run: snapped dt = " + std::to_string(dt) +
                                    " exceeds stability bound 0.2 eps^2; lower dt_factor "
                                    "or snapshot_every");
    const long nsnap = std::lround(t_end / snapshot_every);
    if (std::fabs(nsnap * snapshot_every - t_end) > 1e-9)
        throw std::invalid_argument("run: t_end must be a multiple of snapshot_every");

    SimOutput out;
    SimState s = init_well_prepared(m, traj, eps, g, include_vstar);

    auto record = [&](const SimState& st) {
        out.snapshots.push_back(st);
        out.mass_series.push_back({st.t, st.log_mass});
        out.mode_series.push_back({st.t, mode_logfit(st.density)});
    };
    record(s);

    for (long isnap = 1; isnap <= nsnap; ++isnap) {
        for (long k = 0; k < stride; ++k) {
            double cfrac = 0.0;
            s = step(s, m, dt, backend, &cfrac);
            out.clamped_frac_max = std::max(out.clamped_frac_max, cfrac);
            if (cfrac > 1e-8) out.clamp_flag = true;
        }
        s.t = isnap * snapshot_every;  // suppress dt round-off drift
        record(s);
    }
    return out;
}

}  // namespace qgs
