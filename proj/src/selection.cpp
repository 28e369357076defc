#include "qgs/selection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qgs/profiles.hpp"

namespace qgs {

SelectionModel make_selection(SelectionKind kind, const std::vector<double>& coeffs,
                              double z0) {
    SelectionModel m;
    m.kind = kind;
    m.coeffs = coeffs;
    m.z0 = z0;
    m.mono.fill(0.0);

    switch (kind) {
        case SelectionKind::quadratic: {
            if (coeffs.size() != 1)
                throw std::invalid_argument("selection: quadratic takes one coefficient");
            const double c = coeffs[0];
            // c (z - z0)^2 / 2
            m.mono[0] = 0.5 * c * z0 * z0;
            m.mono[1] = -c * z0;
            m.mono[2] = 0.5 * c;
            m.description = "quadratic";
            break;
        }
        case SelectionKind::polynomial: {
            if (coeffs.empty() || coeffs.size() > 9)
                throw std::invalid_argument("selection: polynomial takes 1..9 coefficients");
            // expand sum a_j (z - z0)^j by recentering the coefficient array at -z0
            std::array<double, 9> a{};
            for (size_t j = 0; j < coeffs.size(); ++j) a[j] = coeffs[j];
            m.mono = recenter_poly(a, -z0);
            m.description = "polynomial";
            break;
        }
        case SelectionKind::double_well: {
            if (coeffs.size() < 2 || coeffs.size() > 3)
                throw std::invalid_argument("selection: double_well takes {a, b[, c]}");
            const double a = coeffs[0];
            const double b = coeffs[1];
            const double c = coeffs.size() == 3 ? coeffs[2] : 0.0;
            // a (z^2 - 1)^2 + b z + c
            m.mono[0] = a + c;
            m.mono[1] = b;
            m.mono[2] = -2.0 * a;
            m.mono[4] = a;
            m.description = "double_well";
            break;
        }
    }
    return m;
}

double eval_m(const SelectionModel& m, double z, int k) {
    if (k < 0 || k > 5)
        throw std::invalid_argument("eval_m: derivative order must be 0..5, got " +
                                    std::to_string(k));
    // differentiate the monomial form, then Horner
    double acc = 0.0;
    for (int j = 8; j >= k; --j) {
        double c = m.mono[static_cast<size_t>(j)];
        for (int d = 0; d < k; ++d) c *= static_cast<double>(j - d);
        acc = acc * z + c;
    }
    return acc;
}

double eval_M(const SelectionModel& m, double z_star, double z) {
    return 1.0 + eval_m(m, z) - eval_m(m, z_star) - eval_m(m, z_star, 1) * (z - z_star);
}

std::array<double, 9> recenter_poly(const std::array<double, 9>& mono, double center) {
    // synthetic division: repeated Horner at `center` peels off Taylor coefficients
    std::array<double, 9> work = mono;
    std::array<double, 9> out{};
    for (int j = 0; j < 9; ++j) {
        double rem = 0.0;
        for (int i = 8; i >= j; --i) {
            rem = rem * center + work[static_cast<size_t>(i)];
            work[static_cast<size_t>(i)] = rem;
        }
        // the quotient is left in place at [j+1..8], aligned for the next peel
        out[static_cast<size_t>(j)] = work[static_cast<size_t>(j)];
    }
    return out;
}

AssumptionReport check_assumptions(const SelectionModel& m, const ReferenceTrajectory& traj,
                                   const Grid& g, double alpha) {
    AssumptionReport rep;
    rep.inf_M = std::numeric_limits<double>::infinity();

    // at most 64 time samples spread over the horizon
    const size_t nt = traj.times.size();
    const size_t tstride = nt > 64 ? (nt - 1) / 63 : 1;

    const int outer = g.n / 8;  // outer 25% = n/8 cells off each end
    double a_sup = 0.0, mid_ratio = 0.0;
    std::array<double, 5> wsup{};
    bool ratios_finite = true;

    for (size_t it = 0; it < nt; it += tstride) {
        const double zs = traj.z_star[it];
        const double mzs = eval_m(m, zs);
        const double dmzs = eval_m(m, zs, 1);
        for (int i = 0; i < g.n; ++i) {
            const double z = g.z(i);
            const double M = 1.0 + eval_m(m, z) - mzs - dmzs * (z - zs);
            if (M < rep.inf_M) rep.inf_M = M;

            const double phi = std::pow(1.0 + std::fabs(z - zs), alpha);
            if (M > 1e-12) {
                for (int k = 1; k <= 5; ++k) {
                    // dM/dz = m'(z) - m'(z*); higher orders equal m^(k)
                    const double dM = k == 1 ? eval_m(m, z, 1) - dmzs : eval_m(m, z, k);
                    const double r = phi * std::fabs(dM) / M;
                    if (r > wsup[static_cast<size_t>(k - 1)]) wsup[static_cast<size_t>(k - 1)] = r;
                }
            } else {
                ratios_finite = false;
            }

            if (i < outer || i >= g.n - outer) {
                const double zb = 0.5 * (z + zs);
                const double Mb = 1.0 + eval_m(m, zb) - mzs - dmzs * (zb - zs);
                if (std::fabs(M) > 1e-12) {
                    const double r = std::fabs(Mb / M);
                    if (r > a_sup) a_sup = r;
                } else {
                    a_sup = std::numeric_limits<double>::infinity();
                }
                const double dMz = eval_m(m, z, 1) - dmzs;
                if (std::fabs(dMz) > 1e-12) {
                    const double r = std::fabs((eval_m(m, zb, 1) - dmzs) / dMz);
                    if (r > mid_ratio) mid_ratio = r;
                }
            }
        }
    }

    rep.weighted_ratio_sup = wsup;
    rep.a_estimate = a_sup;
    rep.a_margin = 0.5 - a_sup;
    rep.midpoint_dM_ratio = mid_ratio;
    rep.cond_gamma = rep.inf_M > 0.0;
    rep.decay_gamma = rep.cond_gamma && ratios_finite;
    for (double w : wsup)
        if (!std::isfinite(w)) rep.decay_gamma = false;
    rep.superlinear = a_sup < 0.5;
    rep.passed = rep.cond_gamma && rep.decay_gamma && rep.superlinear;
    return rep;
}

}  // namespace qgs
