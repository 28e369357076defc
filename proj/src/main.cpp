// Command-line front end: config loading, subcommand dispatch, CSV outputs.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qgs/config.hpp"
#include "qgs/grid.hpp"
#include "qgs/harness.hpp"
#include "qgs/operator.hpp"
#include "qgs/profiles.hpp"
#include "qgs/selection.hpp"
#include "qgs/solver.hpp"

namespace {

using namespace qgs;

std::string fmt(double x, const char* spec = "%.12g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

double traj_step(const RunConfig& cfg) {
    return cfg.snapshot_every / std::ceil(cfg.snapshot_every / 1e-3);
}

ReferenceTrajectory make_traj(const RunConfig& cfg, const SelectionModel& m) {
    return evolve_reference(m, cfg.z_star0, cfg.q0, cfg.p0, cfg.lambda0, cfg.t_end,
                            traj_step(cfg));
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + path);
}

std::string assumption_summary(const AssumptionReport& rep) {
    std::string s;
    s += "inf_M = " + fmt(rep.inf_M) + "\n";
    for (int k = 1; k <= 5; ++k)
        s += "weighted_ratio_sup_d" + std::to_string(k) + " = " +
             fmt(rep.weighted_ratio_sup[static_cast<size_t>(k - 1)]) + "\n";
    s += "a_estimate = " + fmt(rep.a_estimate) + " (margin to 1/2: " + fmt(rep.a_margin) +
         ")\n";
    s += "midpoint_dM_ratio = " + fmt(rep.midpoint_dM_ratio) + "\n";
    s += std::string("cond_gamma = ") + (rep.cond_gamma ? "yes" : "no") + "\n";
    s += std::string("decay_gamma = ") + (rep.decay_gamma ? "yes" : "no") + "\n";
    s += std::string("superlinear = ") + (rep.superlinear ? "yes" : "no") + "\n";
    s += std::string("assumptions_passed = ") + (rep.passed ? "yes" : "no") + "\n";
    return s;
}

void write_meta(const std::string& dir, const RunConfig& cfg, const AssumptionReport& rep,
                const std::string& extra = "") {
    std::ofstream out(dir + "/meta.txt");
    if (!out) throw std::runtime_error("cannot write " + dir + "/meta.txt");
    out << "# resolved configuration\n" << resolved_config_text(cfg);
    out << "\n# structural assumptions over the reference trajectory\n"
        << assumption_summary(rep);
    if (!extra.empty()) out << "\n" << extra;
}

int cmd_simulate(const RunConfig& cfg) {
    if (cfg.epsilon.size() != 1)
        throw std::invalid_argument(
            "simulate expects a single epsilon; a list selects the sweep subcommand");
    const double eps = cfg.epsilon[0];
    const SelectionModel m = selection_from(cfg);
    const Grid g = make_grid(cfg.zmin, cfg.zmax, cfg.n);
    const ReferenceTrajectory traj = make_traj(cfg, m);
    const SimOutput out = run(m, traj, eps, g, cfg.t_end, cfg.snapshot_every, cfg.dt_factor,
                              cfg.backend, cfg.init_vstar);

    ensure_dir(cfg.out_dir);
    {
        std::ofstream f(cfg.out_dir + "/mass.csv");
        f << "t,log_mass\n";
        for (const auto& r : out.mass_series)
            f << fmt(r[0], "%.17g") << "," << fmt(r[1], "%.17g") << "\n";
    }
    {
        std::ofstream f(cfg.out_dir + "/mode.csv");
        f << "t,z_mode\n";
        for (const auto& r : out.mode_series)
            f << fmt(r[0], "%.17g") << "," << fmt(r[1], "%.17g") << "\n";
    }
    for (const auto& s : out.snapshots)
        write_field_csv(cfg.out_dir + "/f_t" + fmt(s.t, "%g") + ".csv", s.density);
    write_trajectory_csv(cfg.out_dir + "/trajectory.csv", traj);

    const AssumptionReport arep = check_assumptions(m, traj, g, cfg.alpha);
    std::string extra = "# run\n";
    extra += "eps = " + fmt(eps) + "\n";
    extra += "snapshots = " + std::to_string(out.snapshots.size()) + "\n";
    extra += "final_mode = " + fmt(out.mode_series.back()[1]) + "\n";
    extra += "final_log_mass = " + fmt(out.mass_series.back()[1]) + "\n";
    extra += "clamped_frac_max = " + fmt(out.clamped_frac_max) + "\n";
    extra += std::string("clamp_flag = ") + (out.clamp_flag ? "yes" : "no") + "\n";
    if (g.h > eps / 4.0)
        extra += "warning = grid spacing " + fmt(g.h) + " exceeds eps/4, under-resolved\n";
    write_meta(cfg.out_dir, cfg, arep, extra);

    std::cout << "simulate: " << out.snapshots.size() << " snapshots to " << cfg.out_dir
              << ", final mode " << fmt(out.mode_series.back()[1]) << ", clamp "
              << (out.clamp_flag ? "yes" : "no") << "\n";
    if (!arep.passed) std::cerr << "warning: structural assumptions not satisfied\n";
    return 0;
}

int cmd_profiles(const RunConfig& cfg) {
    const SelectionModel m = selection_from(cfg);
    const Grid g = make_grid(cfg.zmin, cfg.zmax, cfg.n);
    const ReferenceTrajectory traj = make_traj(cfg, m);

    ensure_dir(cfg.out_dir);
    write_trajectory_csv(cfg.out_dir + "/trajectory.csv", traj);

    Field vs = make_field(g);
    int undefined = 0;
    for (int i = 0; i < g.n; ++i) {
        try {
            vs[i] = v_star(m, cfg.z_star0, g.z(i));
        } catch (const std::domain_error&) {
            vs[i] = std::nan("");
            ++undefined;
        }
    }
    write_field_csv(cfg.out_dir + "/v_star.csv", vs);

    const AssumptionReport arep = check_assumptions(m, traj, g, cfg.alpha);
    const TrajSample end = traj_at(traj, cfg.t_end);
    std::string extra = "# profiles\n";
    extra += "z_star_end = " + fmt(end.z_star) + "\n";
    extra += "lambda_end = " + fmt(end.lambda) + "\n";
    extra += "q_star_end = " + fmt(end.q_star) + "\n";
    extra += "p_star_end = " + fmt(end.p_star) + "\n";
    extra += "v_star_undefined_nodes = " + std::to_string(undefined) + "\n";
    const auto ids = check_vstar_identities(m, cfg.z_star0);
    extra += "v_star_d2_identity_err = " + fmt(ids.first) + "\n";
    extra += "v_star_d3_identity_err = " + fmt(ids.second) + "\n";
    write_meta(cfg.out_dir, cfg, arep, extra);

    std::cout << "profiles: trajectory and V* written to " << cfg.out_dir << " (z*("
              << fmt(cfg.t_end) << ") = " << fmt(end.z_star) << ")\n";
    if (undefined > 0)
        std::cerr << "warning: V* undefined on " << undefined
                  << " nodes (selection ray leaves positivity)\n";
    return 0;
}

struct VerifyTable {
    bool all_pass = true;
    void row(const std::string& name, double measured, double bound, bool pass) {
        all_pass = all_pass && pass;
        std::printf("%-44s %12.4e  (bound %.1e)  %s\n", name.c_str(), measured, bound,
                    pass ? "PASS" : "FAIL");
    }
};

int cmd_verify(const RunConfig& cfg) {
    const SelectionModel m = selection_from(cfg);
    const QuadratureRule2D rule = make_quadrature(cfg.quad_order);
    VerifyTable tab;

    double wsum = 0.0, m2 = 0.0, mcross = 0.0;
    for (size_t i = 0; i < rule.w.size(); ++i) {
        wsum += rule.w[i];
        m2 += rule.w[i] * (rule.y1[i] * rule.y1[i] + rule.y2[i] * rule.y2[i]);
        mcross += rule.w[i] * rule.y1[i] * rule.y2[i];
    }
    const double mass = gauss2d_mass();
    tab.row("quadrature normalization vs 1", std::abs(wsum / mass - 1.0), 1e-10,
            std::abs(wsum / mass - 1.0) <= 1e-10);
    tab.row("quadrature moment y1^2+y2^2 vs 3/2", std::abs(m2 / mass - 1.5), 1e-10,
            std::abs(m2 / mass - 1.5) <= 1e-10);
    tab.row("quadrature moment y1 y2 vs -1/4", std::abs(mcross / mass + 0.25), 1e-10,
            std::abs(mcross / mass + 0.25) <= 1e-10);

    {
        const Grid gw = make_grid(-16.0, 16.0, 1024);
        const Field v0 = make_field(gw);
        for (double eps : {0.5, 0.1, 0.01}) {
            const double err = std::abs(eval_I_eps(0.0, v0, eps, 0.0, 0.0, rule) - 1.0);
            tab.row("I_eps(0,0) = 1 at eps = " + fmt(eps), err, 1e-10, err <= 1e-10);
        }
        Field vc = make_field(gw, 0.7);
        const double a = eval_I_eps(0.3, vc, 0.1, 0.0, 0.2, rule);
        Field v1 = make_field(gw);
        const double b = eval_I_eps(0.3, v1, 0.1, 0.0, 0.2, rule);
        tab.row("I_eps invariance under V + const", std::abs(a - b), 1e-12,
            std::abs(a - b) <= 1e-12);
    }

    const double expected_T[4] = {0.0, 0.0, -0.5, -0.75};
    for (int k = 0; k <= 3; ++k) {
        const double got = spectral_check_T(m, cfg.z_star0, k);
        const double err = std::abs(got - expected_T[k]);
        tab.row("spectral value k = " + std::to_string(k), err, 1e-6, err <= 1e-6);
    }

    {
        const auto ids = check_vstar_identities(m, cfg.z_star0);
        tab.row("d2 V*(z*) vs 2 m''(z*)", ids.first, 1e-5, ids.first <= 1e-5);
        tab.row("d3 V*(z*) vs 4/3 m'''(z*)", ids.second, 1e-5, ids.second <= 1e-5);
    }

    {
        double sup = 0.0;
        int used = 0;
        for (int i = 0; i < 1024; ++i) {
            const double z = cfg.z_star0 + (-8.0 + 16.0 * i / 1023.0);
            try {
                const double vz = v_star(m, cfg.z_star0, z);
                const double vb = v_star(m, cfg.z_star0, 0.5 * (z + cfg.z_star0));
                const double res =
                    std::abs(std::exp(vz - 2.0 * vb) - eval_M(m, cfg.z_star0, z));
                sup = std::max(sup, res);
                ++used;
            } catch (const std::domain_error&) {
            }
        }
        tab.row("V* functional equation residual (" + std::to_string(used) + " nodes)", sup,
                1e-8, used > 0 && sup <= 1e-8);
    }

    std::cout << (tab.all_pass ? "verify: all self-tests pass" : "verify: FAILURES present")
              << "\n";
    return tab.all_pass ? 0 : 2;
}

int cmd_sweep(const RunConfig& cfg) {
    std::vector<double> eps = cfg.epsilon;
    std::sort(eps.begin(), eps.end(), std::greater<double>());
    const ConvergenceReport rep = convergence_sweep(cfg, eps);

    ensure_dir(cfg.out_dir);
    write_report_csv(cfg.out_dir + "/report.csv", rep);
    for (const auto& row : rep.rows) {
        if (row.failed_run) continue;
        const std::string dir = cfg.out_dir + "/eps_" + fmt(row.eps, "%g");
        ensure_dir(dir);
        for (size_t it = 0; it < row.decomps.size(); ++it)
            write_decomposition_csv(dir + "/decomp_t" + fmt(row.times[it], "%g") + ".csv",
                                    row.decomps[it], row.w_fields[it]);
    }

    const SelectionModel m = selection_from(cfg);
    const Grid g = make_grid(cfg.zmin, cfg.zmax, cfg.n);
    const ReferenceTrajectory traj = make_traj(cfg, m);
    const AssumptionReport arep = check_assumptions(m, traj, g, cfg.alpha);

    std::string extra = "# sweep\n";
    extra += "horizon_note = " + rep.horizon_note + "\n";
    extra += "slope_V = " + fmt(rep.slope_v) + "\n";
    extra += "k_prime0 = " + fmt(rep.k_prime0) + "\n";
    extra += std::string("p_uniform_within_k_prime0 = ") + (rep.p_uniform ? "yes" : "no") +
             "\n";
    extra += std::string("mean_shift_trend_decreasing = ") +
             (rep.mean_trend_ok ? "yes" : "no") + "\n";
    for (const auto& row : rep.rows) {
        extra += "row eps = " + fmt(row.eps);
        if (row.failed_run) {
            extra += " FAILED: " + row.error + "\n";
            continue;
        }
        extra += ": sup_F_norm_W = " + fmt(row.sup_f_norm_w);
        extra += ", sup_abs_kappa = " + fmt(row.sup_abs_kappa);
        extra += ", sup_p_err_over_eps2 = " + fmt(row.sup_p_err_over_eps2);
        extra += ", sup_p_half_drift_over_eps2 = " + fmt(row.sup_p_half_drift_over_eps2);
        extra += ", sup_V_err_common_window = " + fmt(row.sup_v_err);
        extra += ", mean_shift_over_eps2 = " + fmt(row.sup_mean_shift_over_eps2);
        extra += ", mass_rate_resid = " + fmt(row.sup_mass_rate_resid);
        extra += std::string(", passed = ") + (row.passed ? "yes" : "no") + "\n";
    }
    write_meta(cfg.out_dir, cfg, arep, extra);

    bool any_failed = false;
    for (const auto& row : rep.rows) any_failed = any_failed || row.failed_run;
    std::cout << "sweep: " << rep.rows.size() << " rows to " << cfg.out_dir << ", slope_V "
              << fmt(rep.slope_v) << ", p uniform " << (rep.p_uniform ? "yes" : "no") << "\n";
    if (any_failed) std::cerr << "warning: some rows failed; report is partial\n";
    return 0;
}

int cmd_check(const RunConfig& cfg) {
    const SelectionModel m = selection_from(cfg);
    const Grid g = make_grid(cfg.zmin, cfg.zmax, cfg.n);
    const ReferenceTrajectory traj = make_traj(cfg, m);
    const AssumptionReport rep = check_assumptions(m, traj, g, cfg.alpha);

    ensure_dir(cfg.out_dir);
    {
        std::ofstream f(cfg.out_dir + "/assumptions.txt");
        f << assumption_summary(rep);
    }
    write_meta(cfg.out_dir, cfg, rep);

    std::cout << assumption_summary(rep);
    if (!rep.passed)
        std::cerr << "warning: structural assumptions not satisfied (reported, not fatal)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"small-variance trait-dynamics toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_override, eps_override;
    CLI::App* sim = app.add_subcommand("simulate", "integrate the density, write snapshots");
    CLI::App* prof = app.add_subcommand("profiles", "reference trajectory and V* field");
    CLI::App* ver = app.add_subcommand("verify", "operator, spectral and series self-tests");
    CLI::App* swp = app.add_subcommand("sweep", "eps-convergence study");
    CLI::App* chk = app.add_subcommand("check", "structural assumption report");
    for (CLI::App* sub : {sim, prof, ver, swp, chk}) {
        sub->add_option("--config", config_path, "configuration file");
        sub->add_option("--out", out_override, "output directory override");
    }
    swp->add_option("--eps", eps_override, "comma-separated epsilon list override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (!eps_override.empty())
            cfg.epsilon = parse_config("epsilon = " + eps_override).epsilon;

        if (sim->parsed()) return cmd_simulate(cfg);
        if (prof->parsed()) return cmd_profiles(cfg);
        if (ver->parsed()) return cmd_verify(cfg);
        if (swp->parsed()) return cmd_sweep(cfg);
        return cmd_check(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
