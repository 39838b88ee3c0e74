// Command-line front end: stationary states of aggregation-diffusion
// free-energy minimizers, critical-exponent tables and plot-ready curves.

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aggdiff/core.hpp"
#include "aggdiff/even_lambda.hpp"
#include "aggdiff/general_lambda.hpp"
#include "aggdiff/quartic.hpp"
#include "aggdiff/specfun.hpp"
#include "output.hpp"

using namespace aggdiff;
using nlohmann::json;
using tools::fmt_double;

namespace {

struct QuadFlags {
    std::string mode = "gauss";
    int points = 0;  // 0 keeps the mode default
    double rmax = 20.0;
    double rtol = 1e-11;
};

void add_quad_flags(CLI::App* cmd, QuadFlags& qf) {
    cmd->add_option("--quad-mode", qf.mode, "Quadrature mode: gauss | riemann")
        ->check(CLI::IsMember({"gauss", "riemann"}));
    cmd->add_option("--quad-points", qf.points,
                    "Gauss panel order / Riemann point count (0 = default)");
    cmd->add_option("--quad-rmax", qf.rmax, "Riemann truncation radius");
    cmd->add_option("--quad-rtol", qf.rtol, "Gauss relative tolerance");
}

quadrature::QuadratureRule make_rule(const QuadFlags& qf) {
    if (qf.mode == "riemann")
        return quadrature::QuadratureRule::riemann(qf.points > 0 ? qf.points : 1000, qf.rmax);
    auto r = quadrature::QuadratureRule::gauss(qf.rtol, 1e-15);
    if (qf.points > 0) r.npoints = qf.points;
    return r;
}

json quad_json(const quadrature::QuadratureRule& r) {
    json j;
    j["mode"] = r.mode == quadrature::QuadMode::TransformedGauss ? "gauss" : "riemann";
    j["points"] = r.npoints;
    if (r.mode == quadrature::QuadMode::UniformRiemann) j["r_max"] = r.r_max;
    j["rel_tol"] = r.rel_tol;
    j["abs_tol"] = r.abs_tol;
    return j;
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

int worker_count() {
    if (const char* env = std::getenv("AGGDIFF_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

std::string branch_name(quartic::Branch b) {
    switch (b) {
        case quartic::Branch::Interior: return "Interior";
        case quartic::Branch::Concentrated: return "Concentrated";
        case quartic::Branch::Boundary: return "Boundary";
    }
    return "?";
}

// exit codes: 0 success, 2 usage/validation, 3 numerical failure
struct ValidationExit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- quartic

int cmd_quartic(int N, double q, std::optional<double> L, bool allow_formal,
                const QuadFlags& qf, const std::string& out, const std::string& cmdline) {
    const auto rule = make_rule(qf);
    const ProblemParams params{N, 4.0, q};
    const Regime regime = classify_regime(params);
    if (regime == Regime::UnboundedBelow)
        throw ValidationExit("free energy unbounded below; regime " + regime_name(regime));
    if (regime == Regime::QuarticFormal && !allow_formal)
        throw ValidationExit(
            "formal regime (infinite free energy); pass --allow-formal to proceed; regime " +
            regime_name(regime));

    json j;
    j["N"] = N;
    j["q"] = q;
    j["regime"] = regime_name(regime);
    j["q_crit4"] = quartic::critical_q4(N);
    if (L) {
        const double B = quartic::solve_B(N, q, *L, {}, rule);
        const auto m = quartic::mass_at_with_B(N, q, *L, B, rule);
        j["branch"] = "FamilyMember";
        j["L"] = *L;
        j["B"] = B;
        j["mass"] = m.divergent ? json("inf") : json(m.value);
        j["atom"] = m.divergent ? 0.0 : std::max(0.0, 1.0 - m.value);
    } else {
        const auto sol = quartic::solve_minimizer_quartic(N, q, allow_formal, rule);
        j["branch"] = branch_name(sol.branch);
        j["L"] = sol.L;
        j["B"] = sol.B;
        j["mass"] = sol.mass;
        j["atom"] = sol.atom;
    }
    json params_j{{"N", N}, {"q", q}, {"allow_formal", allow_formal}};
    if (L) params_j["L"] = *L;
    tools::OutputSink sink(out, params_j, quad_json(rule), cmdline);
    sink.line(j.dump(2));
    sink.flush();
    return 0;
}

// -------------------------------------------------------------- mass-curve

int cmd_mass_curve(int N, double lambda, double amin, double amax, int steps,
                   const QuadFlags& qf, const std::string& out,
                   const std::string& cmdline) {
    if (!lambda_is_even(lambda))
        throw ValidationExit("mass-curve requires an even lambda");
    if (steps < 1) throw ValidationExit("steps must be >= 1");
    if (!(amin > 0.0) || !(amax >= amin))
        throw ValidationExit("need 0 < alpha-min <= alpha-max");
    const int n = int(std::llround(lambda / 2.0));
    const double amax_bound = 2.0 - lambda / 4.0 + lambda / (2.0 * N);
    if (amax > amax_bound + 1e-12)
        throw ValidationExit("alpha-max exceeds 2 - lambda/4 + lambda/(2N)");

    std::vector<double> grid(steps);
    for (int k = 0; k < steps; ++k)
        grid[k] = steps == 1 ? amin : amin + k * (amax - amin) / (steps - 1);
    const auto rule = make_rule(qf);
    const auto curve = even_lambda::mass_curve(N, n, grid, rule);

    tools::OutputSink sink(out,
                           json{{"N", N}, {"lambda", lambda}, {"alpha_min", amin},
                                {"alpha_max", amax}, {"steps", steps}},
                           quad_json(rule), cmdline);
    sink.line("alpha,q,m0,residual,converged");
    int ok = 0;
    for (const auto& pt : curve) {
        sink.line(fmt_double(pt.alpha) + "," + fmt_double(pt.q) + "," +
                  fmt_double(pt.m0.as_double()) + "," + fmt_double(pt.residual) + "," +
                  (pt.converged ? "1" : "0"));
        if (pt.converged) ++ok;
    }
    sink.flush();
    return 10 * ok >= 9 * int(curve.size()) ? 0 : 3;
}

// -------------------------------------------------------------- critical-q

int cmd_critical_q(int N, double lambda, double tol, bool general, int degree,
                   const QuadFlags& qf, const std::string& out,
                   const std::string& cmdline) {
    if (!general && !lambda_is_even(lambda))
        throw ValidationExit("critical-q requires an even lambda unless --general is given");
    json j;
    j["N"] = N;
    j["lambda"] = lambda;
    j["tol"] = tol;
    std::optional<double> qc, ac;
    if (general) {
        j["method"] = "general";
        const auto grid = qf.mode == "riemann"
                              ? make_rule(qf)
                              : quadrature::QuadratureRule::riemann(1000, 20.0);
        const auto cp = general_lambda::critical_q_general(N, lambda, tol, degree, grid);
        if (cp) {
            qc = cp->q_crit;
            ac = cp->alpha_crit;
            j["l1_error"] = cp->l1_at_crossing;
            j["solves_converged"] = cp->converged;
        }
    } else {
        j["method"] = "even";
        const auto rule = make_rule(qf);
        const auto cp =
            even_lambda::critical_q_even(N, int(std::llround(lambda / 2.0)), tol, rule);
        if (cp) {
            qc = cp->q_crit;
            ac = cp->alpha_crit;
        }
    }
    j["concentration"] = qc.has_value();
    if (qc) {
        j["q_crit"] = *qc;
        j["alpha_crit"] = *ac;
    }
    tools::OutputSink sink(out,
                           json{{"N", N}, {"lambda", lambda}, {"tol", tol},
                                {"general", general}, {"degree", degree}},
                           quad_json(make_rule(qf)), cmdline);
    sink.line(j.dump(2));
    sink.flush();
    return 0;
}

// ---------------------------------------------------------- critical-curve

int cmd_critical_curve(int N, double lmin, double lmax, int steps, int degree,
                       double tol, const QuadFlags& qf, const std::string& out,
                       const std::string& cmdline) {
    if (steps < 1) throw ValidationExit("steps must be >= 1");
    if (!(lmin > 0.0) || !(lmax >= lmin))
        throw ValidationExit("need 0 < lambda-min <= lambda-max");
    std::vector<double> lambdas(steps);
    for (int k = 0; k < steps; ++k)
        lambdas[k] = steps == 1 ? lmin : lmin + k * (lmax - lmin) / (steps - 1);

    const auto grid = qf.mode == "riemann" ? make_rule(qf)
                                           : quadrature::QuadratureRule::riemann(1000, 20.0);

    struct Row {
        std::optional<general_lambda::CriticalPoint> cp;
        bool failed = false;
    };
    std::vector<Row> rows(lambdas.size());
    std::atomic<std::size_t> next{0};
    const int nworkers = std::min<int>(worker_count(), int(lambdas.size()));
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= lambdas.size()) break;
            try {
                rows[i].cp =
                    general_lambda::critical_q_general(N, lambdas[i], tol, degree, grid);
            } catch (const std::exception&) {
                rows[i].failed = true;
            }
        }
    };
    if (nworkers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nworkers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    tools::OutputSink sink(out,
                           json{{"N", N}, {"lambda_min", lmin}, {"lambda_max", lmax},
                                {"steps", steps}, {"degree", degree}, {"tol", tol},
                                {"workers", nworkers}},
                           quad_json(grid), cmdline);
    sink.line("lambda,q_crit,alpha_crit,l1_error,converged");
    bool any_failed = false;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (rows[i].failed) {
            any_failed = true;
            sink.line(fmt_double(lambdas[i]) + ",,,,0");
            continue;
        }
        if (rows[i].cp) {
            const auto& cp = *rows[i].cp;
            sink.line(fmt_double(lambdas[i]) + "," + fmt_double(cp.q_crit) + "," +
                      fmt_double(cp.alpha_crit) + "," + fmt_double(cp.l1_at_crossing) + "," +
                      (cp.converged ? "1" : "0"));
        } else {
            sink.line(fmt_double(lambdas[i]) + ",,,,1");  // no crossing
        }
    }
    sink.flush();
    return any_failed ? 3 : 0;
}

// ------------------------------------------------------------ general-solve

int cmd_general_solve(int N, double lambda, double q, int degree, bool allow_formal,
                      bool polish, const QuadFlags& qf, const std::string& out,
                      const std::string& cmdline) {
    const auto grid = qf.mode == "riemann" ? make_rule(qf)
                                           : quadrature::QuadratureRule::riemann(1000, 20.0);
    general_lambda::SolveOptions so;
    so.allow_formal = allow_formal;
    so.polish_continuous = polish;
    const auto sol = general_lambda::solve_general({N, lambda, q}, degree, grid, so);
    json j;
    j["N"] = N;
    j["lambda"] = lambda;
    j["q"] = q;
    j["degree"] = degree;
    j["l1_error"] = sol.l1_error;
    j["l2_residual"] = sol.l2_residual;
    j["mass"] = sol.mass;
    j["atom"] = std::max(0.0, 1.0 - sol.mass);
    j["converged"] = sol.converged;
    j["iterations"] = sol.iterations;
    json coeffs = json::array();
    for (const auto& c : sol.ansatz.coeffs) coeffs.push_back({c.real(), c.imag()});
    j["coefficients"] = coeffs;
    tools::OutputSink sink(out,
                           json{{"N", N}, {"lambda", lambda}, {"q", q}, {"degree", degree},
                                {"allow_formal", allow_formal}, {"polish", polish}},
                           quad_json(grid), cmdline);
    sink.line(j.dump(2));
    sink.flush();
    return sol.converged ? 0 : 3;
}

// ----------------------------------------------------------------- profile

int cmd_profile(int N, double lambda, double q, double L, double rmin, double rmax,
                int points, const QuadFlags& qf, const std::string& out,
                const std::string& cmdline) {
    if (!(rmin > 0.0) || !(rmin < rmax)) throw ValidationExit("need 0 < r-min < r-max");
    if (points < 2) throw ValidationExit("points must be >= 2");
    if (!(L >= 0.0)) throw ValidationExit("L must be >= 0");

    const auto rule = make_rule(qf);
    const ProblemParams params{N, lambda, q};
    const Regime regime = classify_regime(params);

    std::function<double(double)> density;
    double mass = 0.0;
    bool mass_divergent = false;

    if (lambda_is_even(lambda)) {
        const int n = int(std::llround(lambda / 2.0));
        const auto st = even_lambda::solve_betas(N, n, q, L, {}, rule);
        if (!st.converged)
            throw std::runtime_error("profile: stationary solve did not converge");
        const auto m = even_lambda::mass_even(st, rule);
        mass = m.value;
        mass_divergent = m.divergent;
        density = [st](double r) { return even_lambda::density_even(st, r); };
    } else {
        if (L != 0.0)
            throw ValidationExit("profile: L > 0 is only supported for even lambda");
        general_lambda::SolveOptions so;
        so.allow_formal = true;  // the profile is the stationary family member
        const auto grid = quadrature::QuadratureRule::riemann(1000, 20.0);
        const auto sol = general_lambda::solve_general(params, 10, grid, so);
        if (!sol.converged)
            throw std::runtime_error("profile: stationary solve did not converge");
        mass = sol.mass;
        const auto ansatz = sol.ansatz;
        density = [params, ansatz](double r) {
            return general_lambda::density_from_f(params, ansatz, r);
        };
    }

    tools::OutputSink sink(out,
                           json{{"N", N}, {"lambda", lambda}, {"q", q}, {"L", L},
                                {"r_min", rmin}, {"r_max", rmax}, {"points", points}},
                           quad_json(rule), cmdline);
    const double atom = mass_divergent ? 0.0 : std::max(0.0, 1.0 - mass);
    sink.line("# atom=" + fmt_double(atom));
    sink.line("# mass=" + (mass_divergent ? std::string("inf") : fmt_double(mass)));
    sink.line("# L=" + fmt_double(L));
    sink.line("# regime=" + regime_name(regime));
    sink.line("r,rho");
    for (int k = 0; k < points; ++k) {
        const double r = rmin * std::pow(rmax / rmin, double(k) / (points - 1));
        sink.line(fmt_double(r) + "," + fmt_double(density(r)));
    }
    sink.flush();
    return 0;
}

// ------------------------------------------------------------------ kernel

int cmd_kernel(int N, double lambda, double r, double s, const std::string& method,
               const QuadFlags& qf, const std::string& out, const std::string& cmdline) {
    using specfun::KernelMethod;
    json j;
    j["N"] = N;
    j["lambda"] = lambda;
    j["r"] = r;
    j["s"] = s;

    const auto eval = [&](KernelMethod m, specfun::KernelDiag* diag) {
        return specfun::kernel_K(N, lambda, r, s, m, diag);
    };

    if (method == "auto") {
        json methods;
        std::vector<double> values;
        specfun::KernelDiag diag;
        if (lambda_is_even(lambda)) {
            methods["even-poly"] = eval(KernelMethod::EvenPolynomial, nullptr);
            values.push_back(methods["even-poly"].get<double>());
        }
        if (N == 3) {
            methods["closed-n3"] = eval(KernelMethod::ClosedFormN3, nullptr);
            values.push_back(methods["closed-n3"].get<double>());
        }
        methods["hyper"] = eval(KernelMethod::Hypergeometric, &diag);
        values.push_back(methods["hyper"].get<double>());
        if (N >= 2) {
            methods["oracle"] = eval(KernelMethod::GegenbauerQuadratureOracle, nullptr);
            values.push_back(methods["oracle"].get<double>());
        }
        double maxdev = 0.0;
        for (double a : values)
            for (double b : values)
                if (a != 0.0) maxdev = std::max(maxdev, std::fabs(a - b) / std::fabs(a));
        j["methods"] = methods;
        j["value"] = values.front();
        j["max_pairwise_rel_dev"] = maxdev;
        if (diag.lambda_perturbed) {
            j["lambda_perturbed"] = true;
            j["lambda_used"] = diag.lambda_used;
        }
    } else {
        KernelMethod m;
        if (method == "even-poly")
            m = KernelMethod::EvenPolynomial;
        else if (method == "closed-n3")
            m = KernelMethod::ClosedFormN3;
        else if (method == "hyper")
            m = KernelMethod::Hypergeometric;
        else if (method == "oracle")
            m = KernelMethod::GegenbauerQuadratureOracle;
        else
            throw ValidationExit("unknown kernel method: " + method);
        specfun::KernelDiag diag;
        j["value"] = eval(m, &diag);
        j["method"] = method;
        if (diag.lambda_perturbed) {
            j["lambda_perturbed"] = true;
            j["lambda_used"] = diag.lambda_used;
        }
    }
    tools::OutputSink sink(out,
                           json{{"N", N}, {"lambda", lambda}, {"r", r}, {"s", s},
                                {"method", method}},
                           quad_json(make_rule(qf)), cmdline);
    sink.line(j.dump(2));
    sink.flush();
    return 0;
}

// ------------------------------------------------------------ monotonicity

int cmd_monotonicity(int N, double lambda, double q, std::vector<double> L_grid,
                     const QuadFlags& qf, const std::string& out,
                     const std::string& cmdline) {
    if (!lambda_is_even(lambda))
        throw ValidationExit("monotonicity requires an even lambda");
    if (L_grid.empty()) throw ValidationExit("provide at least one L value");
    std::sort(L_grid.begin(), L_grid.end());
    const auto rule = make_rule(qf);
    const auto rep = even_lambda::monotonicity_scan(N, int(std::llround(lambda / 2.0)), q,
                                                    L_grid, rule);
    tools::OutputSink sink(out, json{{"N", N}, {"lambda", lambda}, {"q", q}, {"L", L_grid}},
                           quad_json(rule), cmdline);
    sink.line("# strictly_decreasing=" + std::string(rep.strictly_decreasing ? "1" : "0"));
    sink.line("L,mass,converged");
    for (std::size_t i = 0; i < rep.L_grid.size(); ++i)
        sink.line(fmt_double(rep.L_grid[i]) + "," + fmt_double(rep.masses[i].as_double()) +
                  "," + (rep.converged[i] ? "1" : "0"));
    sink.flush();
    return rep.all_converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cmdline = join_args(argc, argv);
    CLI::App app{"Stationary states of aggregation-diffusion free-energy minimizers"};
    app.require_subcommand(1);

    auto* c_quartic = app.add_subcommand("quartic", "Exact minimizer at lambda = 4");
    int qa_N = 6;
    double qa_q = 0.62;
    bool qa_formal = false;
    QuadFlags qa_qf;
    std::string qa_out;
    double qa_L_value = 0.0;
    c_quartic->add_option("--N", qa_N, "dimension")->required();
    c_quartic->add_option("--q", qa_q, "diffusion exponent")->required();
    auto* qa_L_opt = c_quartic->add_option(
        "--L", qa_L_value, "evaluate the stationary family at this multiplier");
    c_quartic->add_flag("--allow-formal", qa_formal,
                        "allow the formal (infinite-energy) regime");
    c_quartic->add_option("--out", qa_out, "write output to file (+ manifest)");
    add_quad_flags(c_quartic, qa_qf);

    auto* c_curve =
        app.add_subcommand("mass-curve", "Mass of the L = 0 stationary state vs alpha");
    int mc_N = 6;
    double mc_lambda = 4.0, mc_amin = 0.2, mc_amax = 0.99;
    int mc_steps = 40;
    QuadFlags mc_qf;
    std::string mc_out;
    c_curve->add_option("--N", mc_N)->required();
    c_curve->add_option("--lambda", mc_lambda, "even homogeneity")->required();
    c_curve->add_option("--alpha-min", mc_amin)->required();
    c_curve->add_option("--alpha-max", mc_amax)->required();
    c_curve->add_option("--steps", mc_steps)->required();
    c_curve->add_option("--out", mc_out);
    add_quad_flags(c_curve, mc_qf);

    auto* c_critq = app.add_subcommand(
        "critical-q", "Critical diffusion exponent below which concentration occurs");
    int cq_N = 6;
    double cq_lambda = 4.0, cq_tol = 1e-4;
    bool cq_general = false;
    int cq_degree = 10;
    QuadFlags cq_qf;
    std::string cq_out;
    c_critq->add_option("--N", cq_N)->required();
    c_critq->add_option("--lambda", cq_lambda)->required();
    c_critq->add_option("--tol", cq_tol, "bisection tolerance in q");
    c_critq->add_flag("--general", cq_general, "use the general-lambda pipeline");
    c_critq->add_option("--degree", cq_degree, "ansatz degree (general pipeline)");
    c_critq->add_option("--out", cq_out);
    add_quad_flags(c_critq, cq_qf);

    auto* c_ccurve =
        app.add_subcommand("critical-curve", "q_crit(lambda) sweep via the general pipeline");
    int cc_N = 5, cc_steps = 13, cc_degree = 10;
    double cc_lmin = 4.0, cc_lmax = 10.0, cc_tol = 2e-3;
    QuadFlags cc_qf;
    std::string cc_out;
    c_ccurve->add_option("--N", cc_N)->required();
    c_ccurve->add_option("--lambda-min", cc_lmin)->required();
    c_ccurve->add_option("--lambda-max", cc_lmax)->required();
    c_ccurve->add_option("--steps", cc_steps)->required();
    c_ccurve->add_option("--degree", cc_degree);
    c_ccurve->add_option("--tol", cc_tol, "bisection tolerance in q");
    c_ccurve->add_option("--out", cc_out);
    add_quad_flags(c_ccurve, cc_qf);

    auto* c_gen =
        app.add_subcommand("general-solve", "Single stationary solve at L = 0 for any lambda");
    int gs_N = 5, gs_degree = 10;
    double gs_lambda = 6.0, gs_q = 0.52;
    bool gs_formal = false, gs_polish = false;
    QuadFlags gs_qf;
    std::string gs_out;
    c_gen->add_option("--N", gs_N)->required();
    c_gen->add_option("--lambda", gs_lambda)->required();
    c_gen->add_option("--q", gs_q)->required();
    c_gen->add_option("--degree", gs_degree);
    c_gen->add_flag("--allow-formal", gs_formal);
    c_gen->add_flag("--polish", gs_polish,
                    "refine against the continuous map after the grid solve");
    c_gen->add_option("--out", gs_out);
    add_quad_flags(c_gen, gs_qf);

    auto* c_prof =
        app.add_subcommand("profile", "Radial density profile of the stationary state");
    int pf_N = 6, pf_points = 100;
    double pf_lambda = 4.0, pf_q = 0.55, pf_L = 0.0, pf_rmin = 1e-3, pf_rmax = 1e3;
    QuadFlags pf_qf;
    std::string pf_out;
    c_prof->add_option("--N", pf_N)->required();
    c_prof->add_option("--lambda", pf_lambda)->required();
    c_prof->add_option("--q", pf_q)->required();
    c_prof->add_option("--L", pf_L, "Lagrange multiplier (default 0)");
    c_prof->add_option("--r-min", pf_rmin)->required();
    c_prof->add_option("--r-max", pf_rmax)->required();
    c_prof->add_option("--points", pf_points)->required();
    c_prof->add_option("--out", pf_out);
    add_quad_flags(c_prof, pf_qf);

    auto* c_kern = app.add_subcommand("kernel", "Radial interaction kernel K(r,s)");
    int kn_N = 5;
    double kn_lambda = 4.0, kn_r = 1.0, kn_s = 1.0;
    std::string kn_method = "auto";
    QuadFlags kn_qf;
    std::string kn_out;
    c_kern->add_option("--N", kn_N)->required();
    c_kern->add_option("--lambda", kn_lambda)->required();
    c_kern->add_option("--r", kn_r)->required();
    c_kern->add_option("--s", kn_s)->required();
    c_kern->add_option("--method", kn_method, "auto | even-poly | closed-n3 | hyper | oracle");
    c_kern->add_option("--out", kn_out);
    add_quad_flags(c_kern, kn_qf);

    auto* c_mono = app.add_subcommand("monotonicity", "Mass m(L) scan along an L grid");
    int mn_N = 4;
    double mn_lambda = 6.0, mn_q = 0.5;
    std::vector<double> mn_L;
    QuadFlags mn_qf;
    std::string mn_out;
    c_mono->add_option("--N", mn_N)->required();
    c_mono->add_option("--lambda", mn_lambda)->required();
    c_mono->add_option("--q", mn_q)->required();
    c_mono->add_option("--L", mn_L, "L values (repeat or comma separated)")
        ->required()
        ->delimiter(',');
    c_mono->add_option("--out", mn_out);
    add_quad_flags(c_mono, mn_qf);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*c_quartic) {
            std::optional<double> L;
            if (qa_L_opt->count() > 0) L = qa_L_value;
            return cmd_quartic(qa_N, qa_q, L, qa_formal, qa_qf, qa_out, cmdline);
        }
        if (*c_curve)
            return cmd_mass_curve(mc_N, mc_lambda, mc_amin, mc_amax, mc_steps, mc_qf,
                                  mc_out, cmdline);
        if (*c_critq)
            return cmd_critical_q(cq_N, cq_lambda, cq_tol, cq_general, cq_degree, cq_qf,
                                  cq_out, cmdline);
        if (*c_ccurve)
            return cmd_critical_curve(cc_N, cc_lmin, cc_lmax, cc_steps, cc_degree, cc_tol,
                                      cc_qf, cc_out, cmdline);
        if (*c_gen)
            return cmd_general_solve(gs_N, gs_lambda, gs_q, gs_degree, gs_formal,
                                     gs_polish, gs_qf, gs_out, cmdline);
        if (*c_prof)
            return cmd_profile(pf_N, pf_lambda, pf_q, pf_L, pf_rmin, pf_rmax, pf_points,
                               pf_qf, pf_out, cmdline);
        if (*c_kern)
            return cmd_kernel(kn_N, kn_lambda, kn_r, kn_s, kn_method, kn_qf, kn_out, cmdline);
        if (*c_mono)
            return cmd_monotonicity(mn_N, mn_lambda, mn_q, mn_L, mn_qf, mn_out, cmdline);
    } catch (const ValidationExit& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
