#include "qgs/profiles.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace qgs {

namespace {

struct RefState {
    double zs, lam, q, p;
};

RefState rhs(const SelectionModel& m, const RefState& y) {
    const double m1 = eval_m(m, y.zs, 1);
    const double m2 = eval_m(m, y.zs, 2);
    const double m3 = eval_m(m, y.zs, 3);
    RefState d;
    d.zs = -m1;
    d.lam = 1.0 - eval_m(m, y.zs);
    d.q = -m2 * y.q + 0.5 * m3 - 2.0 * m2 * m1;
    d.p = -m1 * y.q + m2;
    return d;
}

RefState axpy(const RefState& y, double a, const RefState& d) {
    return {y.zs + a * d.zs, y.lam + a * d.lam, y.q + a * d.q, y.p + a * d.p};
}

}  // namespace

ReferenceTrajectory evolve_reference(const SelectionModel& m, double z0, double q0,
                                     double p0, double lambda0, double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end >= dt))
        throw std::invalid_argument("evolve_reference: need 0 < dt <= t_end");
    long nsteps = std::lround(t_end / dt);
    if (nsteps < 1 || std::fabs(nsteps * dt - t_end) > 1e-9 * std::max(1.0, t_end)) {
        nsteps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
        dt = t_end / static_cast<double>(nsteps);
    }

    ReferenceTrajectory traj;
    traj.dt = dt;
    traj.times.reserve(static_cast<size_t>(nsteps) + 1);
    traj.z_star.reserve(static_cast<size_t>(nsteps) + 1);
    RefState y{z0, lambda0, q0, p0};
    for (long i = 0; i <= nsteps; ++i) {
        const double t = static_cast<double>(i) * dt;
        traj.times.push_back(t);
        traj.z_star.push_back(y.zs);
        traj.lambda.push_back(y.lam);
        traj.q_star.push_back(y.q);
        traj.p_star.push_back(y.p);
        if (!(std::isfinite(y.zs) && std::isfinite(y.lam) && std::isfinite(y.q) &&
              std::isfinite(y.p)))
            throw std::runtime_error("evolve_reference: divergence, last valid t = " +
                                     std::to_string(t - dt));
        if (i == nsteps) break;
        const RefState k1 = rhs(m, y);
        const RefState k2 = rhs(m, axpy(y, 0.5 * dt, k1));
        const RefState k3 = rhs(m, axpy(y, 0.5 * dt, k2));
        const RefState k4 = rhs(m, axpy(y, dt, k3));
        y.zs += dt / 6.0 * (k1.zs + 2.0 * k2.zs + 2.0 * k3.zs + k4.zs);
        y.lam += dt / 6.0 * (k1.lam + 2.0 * k2.lam + 2.0 * k3.lam + k4.lam);
        y.q += dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
        y.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    }
    return traj;
}

TrajSample traj_at(const ReferenceTrajectory& traj, double t) {
    if (traj.times.empty()) throw std::out_of_range("traj_at: empty trajectory");
    const double t0 = traj.times.front();
    const double t1 = traj.times.back();
    if (t < t0 - 1e-9 || t > t1 + 1e-9)
        throw std::out_of_range("traj_at: t = " + std::to_string(t) +
                                " outside [" + std::to_string(t0) + ", " +
                                std::to_string(t1) + "]");
    const double x = (t - t0) / traj.dt;
    long i = std::lround(x);
    if (i < 0) i = 0;
    if (i >= static_cast<long>(traj.times.size())) i = static_cast<long>(traj.times.size()) - 1;
    const size_t ui = static_cast<size_t>(i);
    if (std::fabs(t - traj.times[ui]) <= 1e-9)
        return {traj.z_star[ui], traj.lambda[ui], traj.q_star[ui], traj.p_star[ui]};
    const size_t a = static_cast<size_t>(std::floor(x));
    const size_t b = a + 1 < traj.times.size() ? a + 1 : a;
    const double w = b == a ? 0.0 : (t - traj.times[a]) / (traj.times[b] - traj.times[a]);
    auto lin = [&](const std::vector<double>& s) { return (1.0 - w) * s[a] + w * s[b]; };
    return {lin(traj.z_star), lin(traj.lambda), lin(traj.q_star), lin(traj.p_star)};
}

double v_star(const SelectionModel& m, double z_star, double z, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("v_star: tol must be positive");
    const double delta = z - z_star;
    if (delta == 0.0) return 0.0;

    // Taylor shift to z*: m(z* + s) - m(z*) - m'(z*) s = sum_{j>=2} b_j s^j,
    // so M(z* + s) = 1 + that sum, evaluated without cancellation
    const std::array<double, 9> b = recenter_poly(m.mono, z_star);

    double sum = 0.0;
    double prev = 0.0;
    for (int k = 0; k < 60; ++k) {
        const double s = std::ldexp(delta, -k);
        double d = 0.0;
        for (int j = 8; j >= 2; --j) d = d * s + b[static_cast<size_t>(j)];
        d *= s * s;
        if (!(1.0 + d > 0.0))
            throw std::domain_error("v_star: M <= 0 at z = " + std::to_string(z_star + s) +
                                    " on the dyadic ray (k = " + std::to_string(k) + ")");
        const double term = std::ldexp(std::log1p(d), k);
        sum += term;
        if (k >= 6 && std::fabs(prev) > 1e3 * tol && std::fabs(term) > 0.95 * std::fabs(prev))
            throw std::runtime_error("v_star: series decay violated at k = " +
                                     std::to_string(k) + ", z = " + std::to_string(z));
        if (k >= 8 && std::fabs(term) < tol) break;
        prev = term;
    }
    return sum;
}

std::pair<double, double> check_vstar_identities(const SelectionModel& m, double z_star,
                                                 double h) {
    // series truncation far below the h^2..h^3 cancellation floor
    const double tol = 1e-18;
    std::array<double, 5> v{};
    for (int j = -2; j <= 2; ++j)
        v[static_cast<size_t>(j + 2)] = v_star(m, z_star, z_star + j * h, tol);

    const double fd2 = (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) /
                       (12.0 * h * h);
    const double fd3 = (-v[0] + 2.0 * v[1] - 2.0 * v[3] + v[4]) / (2.0 * h * h * h);
    const double t2 = 2.0 * eval_m(m, z_star, 2);
    const double t3 = 4.0 / 3.0 * eval_m(m, z_star, 3);

    auto err = [](double fd, double target) {
        const double e = std::fabs(fd - target);
        return std::fabs(target) > 1e-9 ? e / std::fabs(target) : e;
    };
    return {err(fd2, t2), err(fd3, t3)};
}

double u_star(const SelectionModel& m, const ReferenceTrajectory& traj, double t, double z) {
    const TrajSample s = traj_at(traj, t);
    return s.p_star + s.q_star * (z - s.z_star) + v_star(m, s.z_star, z);
}

void write_trajectory_csv(const std::string& path, const ReferenceTrajectory& traj) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    os << "t,z_star,lambda,q_star,p_star\n";
    char buf[160];
    for (size_t i = 0; i < traj.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", traj.times[i],
                      traj.z_star[i], traj.lambda[i], traj.q_star[i], traj.p_star[i]);
        os << buf;
    }
}

}  // namespace qgs
