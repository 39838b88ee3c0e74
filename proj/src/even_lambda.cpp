#include "aggdiff/even_lambda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aggdiff/numerics.hpp"
#include "aggdiff/specfun.hpp"

namespace aggdiff::even_lambda {

namespace {

double p_exp(double q) { return 1.0 / (1.0 - q); }

}  // namespace

void check_moment_range(int dim, int n, double q) {
    if (dim < 1 || n < 1) throw std::invalid_argument("even_lambda: N >= 1, n >= 1");
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("even_lambda: q outside (0,1)");
    if (n == 1) return;  // no moment equations at lambda = 2
    const double nn = dim;
    const double lambda = 2.0 * n;
    const double lo = (nn - 2.0) / (nn + lambda - 2.0);
    const double hi = nn / (nn + 2.0);
    if (!(q > lo && q < hi))
        throw std::invalid_argument(
            "even_lambda: q outside the moment-convergence window ((N-2)/(N+lambda-2), N/(N+2))");
}

const quadrature::QuadratureRule& default_rule() {
    // The auxiliary functional must reach 1e-14 in absolute terms while the
    // coefficients can be of order 1e5; the moment integrals need matching
    // relative accuracy.
    static const quadrature::QuadratureRule rule = quadrature::QuadratureRule::gauss(1e-13, 1e-16);
    return rule;
}

namespace {

struct DensityEval {
    int n;
    std::vector<double> beta;
    double L;
    double pref;
    double p;

    // D(r) = r^{2n} + sum beta_i r^{2i} + L via Horner in t = r^2:
    // ((...(1*t + b_{n-1})t + ... + b_1)t + L.
    double denom(double r) const {
        const double t = r * r;
        double v = 1.0;
        for (int i = n - 1; i >= 1; --i) v = v * t + beta[i - 1];
        return v * t + L;
    }
    double rho(double r) const { return pref * std::pow(denom(r), -p); }
};

DensityEval make_eval(int n, const std::vector<double>& beta, double L, double q) {
    if (int(beta.size()) != n - 1)
        throw std::invalid_argument("even_lambda: beta must have length n-1");
    return DensityEval{n, beta, L, el_prefactor(q), p_exp(q)};
}

// Moment int |y|^k rho dy of a density with denominator exponent `pw`
// (pw = p for rho itself, p(2-q) for rho^{2-q}).
double moment_of_power(int dim, int n, double q, double L,
                       const std::vector<double>& beta, int k, double scale,
                       double pw, const quadrature::QuadratureRule& rule) {
    const DensityEval ev = make_eval(n, beta, L, q);
    quadrature::EndpointHints h;
    h.origin_exponent = L > 0.0 ? 0.0 : -2.0 * pw;
    h.decay_exponent = 2.0 * n * pw;
    const auto profile = [&ev, pw, scale](double r) {
        return scale * std::pow(ev.denom(r), -pw);
    };
    return quadrature::weighted_moment(profile, k, dim, rule, h).value;
}

}  // namespace

double density_even(const BetaState& state, double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("density_even: r >= 0 required");
    if (r == 0.0 && state.L == 0.0) return std::numeric_limits<double>::infinity();
    return make_eval(state.n, state.beta, state.L, state.q).rho(r);
}

std::vector<double> fixed_point_map(int dim, int n, double q, double L,
                                    const std::vector<double>& beta,
                                    const quadrature::QuadratureRule& rule) {
    check_moment_range(dim, n, q);
    if (n == 1) return {};
    const auto coef = specfun::even_coefficients(dim, n);
    const double pref = el_prefactor(q);
    std::vector<double> F(n - 1);
    for (int i = 1; i <= n - 1; ++i)
        F[i - 1] = coef[i - 1] *
                   moment_of_power(dim, n, q, L, beta, 2 * n - 2 * i, pref, p_exp(q), rule);
    return F;
}

std::vector<std::vector<double>> jacobian_fixed_point(
    int dim, int n, double q, double L, const std::vector<double>& beta,
    const quadrature::QuadratureRule& rule) {
    check_moment_range(dim, n, q);
    const auto coef = specfun::even_coefficients(dim, n);
    const double pw = (2.0 - q) * p_exp(q);
    const double scale = std::pow(el_prefactor(q), 2.0 - q);
    std::vector<std::vector<double>> J(n - 1, std::vector<double>(n - 1));
    for (int i = 1; i <= n - 1; ++i)
        for (int j = 1; j <= n - 1; ++j)
            J[i - 1][j - 1] = -(coef[i - 1] / q) *
                              moment_of_power(dim, n, q, L, beta,
                                              2 * n - 2 * i + 2 * j, scale, pw, rule);
    return J;
}

double residual_I(int dim, int n, double q, double L,
                  const std::vector<double>& beta,
                  const quadrature::QuadratureRule& rule) {
    const auto F = fixed_point_map(dim, n, q, L, beta, rule);
    double s = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double r = beta[i] - F[i];
        s += r * r;
    }
    return s;
}

namespace {

// Scale seed: beta_i = C(n,i) sigma^{2(n-i)} reproduces the binomial family
// (r^2 + sigma^2)^n (minus its constant term); sigma is fixed by solving the
// last fixed-point component on this one-parameter slice.
std::vector<double> binomial_beta(int n, double sigma) {
    std::vector<double> beta(n - 1);
    for (int i = 1; i <= n - 1; ++i) {
        double c = 1.0;
        for (int j = 0; j < n - i; ++j) c *= double(n - j) / (j + 1.0);
        beta[i - 1] = c * std::pow(sigma, 2.0 * (n - i));
    }
    return beta;
}

std::vector<double> seed_beta(int dim, int n, double q, double L,
                              const quadrature::QuadratureRule& rule) {
    const auto g = [&](double sigma) {
        const auto beta = binomial_beta(n, sigma);
        const auto F = fixed_point_map(dim, n, q, L, beta, rule);
        return beta[n - 2] - F[n - 2];
    };
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (g(lo) > 0.0 && ++guard < 60) lo *= 0.5;
    guard = 0;
    while (g(hi) < 0.0 && ++guard < 60) hi *= 2.0;
    numerics::RootConfig rc;
    rc.abs_tol = 1e-8 * std::max(1.0, hi);
    const double sigma = numerics::find_root_bracketed(g, lo, hi, rc);
    return binomial_beta(n, sigma);
}

struct SolveAttempt {
    std::vector<double> beta;
    double I = std::numeric_limits<double>::infinity();
    bool ok = false;
};

// Damped Newton on G(beta) = beta - F(beta), equilibrated in log
// coordinates (the coefficients span many decades).  The system can be
// nearly singular toward the upper end of the q window; Marquardt damping
// is escalated until a step gives a real decrease of the functional.
// Squared residual restricted to components [lo..m).
double block_I(const std::vector<double>& beta, const std::vector<double>& F, int lo) {
    double s = 0.0;
    for (std::size_t i = lo; i < beta.size(); ++i) {
        const double r = beta[i] - F[i];
        s += r * r;
    }
    return s;
}

// Damped Newton on components [lo..m) of G(beta) = beta - F(beta) with the
// leading components frozen, equilibrated in log coordinates (the
// coefficients span many decades).  Marquardt damping is escalated until a
// step yields a real decrease.
void newton_refine_block(int dim, int n, double q, double L,
                         const quadrature::QuadratureRule& rule,
                         std::vector<double>& beta, int lo, int max_iter) {
    const int m = n - 1;
    const int mb = m - lo;
    if (mb <= 0) return;
    int stagnant = 0;
    double I = block_I(beta, fixed_point_map(dim, n, q, L, beta, rule), lo);
    for (int it = 0; it < max_iter; ++it) {
        const auto F = fixed_point_map(dim, n, q, L, beta, rule);
        I = block_I(beta, F, lo);
        double worst = 0.0;
        for (int i = lo; i < m; ++i)
            worst = std::max(worst,
                             std::fabs(beta[i] - F[i]) / std::max(1.0, std::fabs(beta[i])));
        if (worst < 1e-12 && I < 1e-20) break;
        const auto J = jacobian_fixed_point(dim, n, q, L, beta, rule);

        double best_I = I;
        std::vector<double> best_beta;
        for (double nu : {0.0, 1e-6, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
            std::vector<std::vector<double>> A(mb, std::vector<double>(mb + 1));
            for (int i = 0; i < mb; ++i) {
                for (int j = 0; j < mb; ++j)
                    A[i][j] = ((i == j ? 1.0 + nu : 0.0) - J[lo + i][lo + j]) *
                              beta[lo + j] / beta[lo + i];
                A[i][mb] = (F[lo + i] - beta[lo + i]) / beta[lo + i];
            }
            bool singular = false;
            for (int col = 0; col < mb && !singular; ++col) {
                int piv = col;
                for (int r2 = col + 1; r2 < mb; ++r2)
                    if (std::fabs(A[r2][col]) > std::fabs(A[piv][col])) piv = r2;
                std::swap(A[col], A[piv]);
                if (std::fabs(A[col][col]) < 1e-300) {
                    singular = true;
                    break;
                }
                for (int r2 = col + 1; r2 < mb; ++r2) {
                    const double fct = A[r2][col] / A[col][col];
                    for (int cc = col; cc <= mb; ++cc) A[r2][cc] -= fct * A[col][cc];
                }
            }
            if (singular) continue;
            std::vector<double> y(mb);
            for (int i = mb - 1; i >= 0; --i) {
                double acc = A[i][mb];
                for (int j = i + 1; j < mb; ++j) acc -= A[i][j] * y[j];
                y[i] = acc / A[i][i];
            }
            std::vector<double> trial = beta;
            for (double step = 1.0; step > 1e-8; step *= 0.5) {
                bool positive = true;
                for (int i = 0; i < mb; ++i) {
                    trial[lo + i] = beta[lo + i] * (1.0 + step * y[i]);
                    if (!(trial[lo + i] > 0.0)) positive = false;
                }
                if (!positive) continue;
                const double Inew =
                    block_I(trial, fixed_point_map(dim, n, q, L, trial, rule), lo);
                if (Inew < best_I) {
                    best_I = Inew;
                    best_beta = trial;
                }
                if (Inew < 0.5 * I) break;
            }
            if (best_I < 0.5 * I) break;
        }
        if (best_beta.empty()) break;
        stagnant = best_I > 0.8 * I ? stagnant + 1 : 0;
        beta = std::move(best_beta);
        I = best_I;
        if (stagnant >= 3) break;
    }
}

void newton_refine(int dim, int n, double q, double L,
                   const quadrature::QuadratureRule& rule, std::vector<double>& beta,
                   double& I, int max_iter) {
    newton_refine_block(dim, n, q, L, rule, beta, 0, max_iter);
    I = residual_I(dim, n, q, L, beta, rule);
}

// Damped fixed-point iteration in log coordinates.  Slow but unconditionally
// stable across the extreme coefficient scales that appear when q approaches
// the top of the admissible window (the leading coefficient collapses and
// the others blow up); Newton steps cannot traverse that region.
void picard_refine(int dim, int n, double q, double L,
                   const quadrature::QuadratureRule& rule, std::vector<double>& beta,
                   int max_iter, double theta = 0.3) {
    const int m = n - 1;
    std::vector<double> u(m);
    for (int i = 0; i < m; ++i) u[i] = std::log(beta[i]);
    for (int it = 0; it < max_iter; ++it) {
        const auto F = fixed_point_map(dim, n, q, L, beta, rule);
        double worst = 0.0;
        bool finite = true;
        for (int i = 0; i < m; ++i) {
            if (!(F[i] > 0.0) || !std::isfinite(F[i])) finite = false;
        }
        if (!finite) return;
        for (int i = 0; i < m; ++i)
            worst = std::max(worst, std::fabs(std::log(F[i] / beta[i])));
        if (worst < 1e-13) return;
        for (int i = 0; i < m; ++i) {
            u[i] += theta * std::log(F[i] / beta[i]);
            beta[i] = std::exp(u[i]);
        }
    }
}

SolveAttempt attempt_solve(int dim, int n, double q, double L,
                           const std::vector<double>& beta0,
                           const quadrature::QuadratureRule& rule) {
    const int m = n - 1;
    const auto to_beta = [m](const std::vector<double>& u) {
        std::vector<double> b(m);
        for (int i = 0; i < m; ++i) b[i] = std::exp(u[i]);
        return b;
    };
    const auto obj = [&](const std::vector<double>& u) {
        return residual_I(dim, n, q, L, to_beta(u), rule);
    };
    const auto grad = [&](const std::vector<double>& u) {
        const auto beta = to_beta(u);
        const auto F = fixed_point_map(dim, n, q, L, beta, rule);
        const auto J = jacobian_fixed_point(dim, n, q, L, beta, rule);
        std::vector<double> g(m, 0.0);
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) {
                const double del = i == j ? 1.0 : 0.0;
                acc += 2.0 * (beta[i] - F[i]) * (del - J[i][j]);
            }
            g[j] = acc * beta[j];
        }
        return g;
    };

    SolveAttempt out;
    out.beta = beta0;
    out.I = residual_I(dim, n, q, L, beta0, rule);

    numerics::QuasiNewtonConfig cfg;
    cfg.grad_tol = 1e-13;
    cfg.step_tol = 1e-15;
    cfg.max_iter = 400;
    for (int round = 0; round < 2; ++round) {
        std::vector<double> u0(m);
        for (int i = 0; i < m; ++i) u0[i] = std::log(std::max(out.beta[i], 1e-300));
        const auto res = numerics::minimize_quasi_newton(obj, numerics::Gradient(grad), u0, cfg);
        if (res.value < out.I) {
            out.I = res.value;
            out.beta = to_beta(res.x);
        }
        newton_refine(dim, n, q, L, rule, out.beta, out.I, 30);
        auto check = [&] {
            const auto F = fixed_point_map(dim, n, q, L, out.beta, rule);
            double worst = 0.0, scale = 1.0;
            for (int i = 0; i < m; ++i) {
                worst = std::max(worst, std::fabs(out.beta[i] - F[i]) /
                                            std::max(1.0, std::fabs(out.beta[i])));
                scale = std::max(scale, std::fabs(out.beta[i]));
            }
            out.I = residual_I(dim, n, q, L, out.beta, rule);
            // the absolute bar 1e-14 applies verbatim for O(1) coefficients;
            // for the extreme configurations near the top of the q window it
            // scales with the largest coefficient (the quadrature noise floor
            // of I grows with beta^2)
            out.ok = out.I < 1e-14 * scale * scale && worst < 1e-7;
        };
        check();
        if (!out.ok && m >= 2) {
            picard_refine(dim, n, q, L, rule, out.beta, 6000);
            newton_refine(dim, n, q, L, rule, out.beta, out.I, 10);
            check();
        }
        if (out.ok) break;
        cfg.max_iter = 200;
    }
    return out;
}

}  // namespace

BetaState solve_betas(int dim, int n, double q, double L,
                      const std::optional<std::vector<double>>& init,
                      const quadrature::QuadratureRule& rule) {
    check_moment_range(dim, n, q);
    if (!(L >= 0.0)) throw std::invalid_argument("solve_betas: L >= 0 required");
    BetaState st;
    st.dim = dim;
    st.n = n;
    st.q = q;
    st.L = L;
    if (n == 1) {
        st.converged = true;
        st.residual = 0.0;
        return st;
    }

    std::vector<std::vector<double>> starts;
    if (init && int(init->size()) == n - 1) starts.push_back(*init);
    std::vector<double> seed;
    try {
        seed = seed_beta(dim, n, q, L, rule);
        starts.push_back(seed);
    } catch (const std::exception&) {
        // fall through to fixed multi-starts
    }
    if (seed.empty()) seed = binomial_beta(n, 1.0);
    for (double fct : {0.1, 10.0}) {
        auto s = seed;
        for (int i = 1; i <= n - 1; ++i) s[i - 1] *= std::pow(fct, 2.0 * (n - i) / double(n));
        starts.push_back(std::move(s));
    }

    SolveAttempt best;
    for (const auto& b0 : starts) {
        try {
            const auto at = attempt_solve(dim, n, q, L, b0, rule);
            if (at.I < best.I) best = at;
        } catch (const std::exception&) {
            continue;
        }
        if (best.ok) break;
    }
    if (best.beta.empty()) best.beta = starts.empty() ? binomial_beta(n, 1.0) : starts.front();
    st.beta = best.beta;
    st.residual = best.I;
    st.converged = best.ok;
    return st;
}

MassValue mass_even(const BetaState& state, const quadrature::QuadratureRule& rule) {
    check_moment_range(state.dim, state.n, state.q);
    const double nn = state.dim;
    if (state.L == 0.0 && state.q >= (nn - 2.0) / nn) return MassValue::infinite();
    const double m = moment_of_power(state.dim, state.n, state.q, state.L, state.beta,
                                     0, el_prefactor(state.q), p_exp(state.q), rule);
    return MassValue::finite(m);
}

std::vector<MassCurvePoint> mass_curve(int dim, int n,
                                       const std::vector<double>& alpha_grid,
                                       const quadrature::QuadratureRule& rule) {
    const double lambda = 2.0 * n;
    std::vector<MassCurvePoint> curve;
    curve.reserve(alpha_grid.size());
    std::optional<std::vector<double>> warm;
    for (double alpha : alpha_grid) {
        MassCurvePoint pt;
        pt.alpha = alpha;
        try {
            pt.q = q_from_alpha(dim, lambda, alpha);
            const auto st = solve_betas(dim, n, pt.q, 0.0, warm, rule);
            pt.residual = st.residual;
            pt.converged = st.converged;
            if (st.converged) {
                pt.m0 = mass_even(st, rule);
                warm = st.beta;
            } else {
                pt.m0 = MassValue::finite(std::numeric_limits<double>::quiet_NaN());
            }
        } catch (const std::exception&) {
            pt.q = std::numeric_limits<double>::quiet_NaN();
            pt.m0 = MassValue::finite(std::numeric_limits<double>::quiet_NaN());
            pt.converged = false;
        }
        curve.push_back(std::move(pt));
    }
    return curve;
}

std::optional<CriticalPoint> critical_q_even(int dim, int n, double tol,
                                             const quadrature::QuadratureRule& rule) {
    if (!(tol > 0.0)) throw std::invalid_argument("critical_q_even: tol > 0 required");
    const double nn = dim;
    const double lambda = 2.0 * n;
    const double eps = 1e-4;
    const double lo0 = nn / (nn + lambda) + eps;
    const double hi0 = std::min(nn / (nn + 2.0), (nn - 2.0) / nn) - eps;
    if (!(hi0 > lo0)) return std::nullopt;  // empty admissible window

    std::optional<std::vector<double>> warm;
    const auto mass_at_q = [&](double q) {
        const auto st = solve_betas(dim, n, q, 0.0, warm, rule);
        if (!st.converged)
            throw std::runtime_error("critical_q_even: unconverged solve at interior q");
        warm = st.beta;
        return mass_even(st, rule).as_double();
    };

    // Pre-scan: m(0; q) must increase with q across the window.
    double prev = -std::numeric_limits<double>::infinity();
    std::vector<double> scan_q(8);
    for (int k = 0; k < 8; ++k) scan_q[k] = lo0 + (k + 1) * (hi0 - lo0) / 9.0;
    std::vector<double> scan_m(8);
    for (int k = 0; k < 8; ++k) {
        scan_m[k] = mass_at_q(scan_q[k]);
        if (!(scan_m[k] > prev))
            throw std::runtime_error("critical_q_even: mass not monotone in q; manual inspection required");
        prev = scan_m[k];
    }

    warm.reset();
    const double mlo = mass_at_q(lo0);
    if (mlo >= 1.0) return std::nullopt;  // mass never drops below 1
    double qlo = lo0, qhi = hi0;
    double mhi = mass_at_q(hi0);
    if (mhi < 1.0) return std::nullopt;  // no crossing inside the window
    while (qhi - qlo > tol) {
        const double qm = 0.5 * (qlo + qhi);
        if (mass_at_q(qm) < 1.0)
            qlo = qm;
        else
            qhi = qm;
    }
    CriticalPoint cp;
    cp.q_crit = 0.5 * (qlo + qhi);
    cp.alpha_crit = alpha_from_q(ProblemParams{dim, lambda, cp.q_crit});
    return cp;
}

MonotonicityReport monotonicity_scan(int dim, int n, double q,
                                     const std::vector<double>& L_grid,
                                     const quadrature::QuadratureRule& rule) {
    if (!std::is_sorted(L_grid.begin(), L_grid.end()))
        throw std::invalid_argument("monotonicity_scan: L grid must be ascending");
    MonotonicityReport rep;
    rep.L_grid = L_grid;
    rep.all_converged = true;
    std::optional<std::vector<double>> warm;
    for (double L : L_grid) {
        try {
            const auto st = solve_betas(dim, n, q, L, warm, rule);
            rep.converged.push_back(st.converged);
            rep.all_converged = rep.all_converged && st.converged;
            rep.masses.push_back(st.converged ? mass_even(st, rule)
                                              : MassValue::finite(std::numeric_limits<double>::quiet_NaN()));
            if (st.converged) warm = st.beta;
        } catch (const std::exception&) {
            rep.converged.push_back(false);
            rep.all_converged = false;
            rep.masses.push_back(MassValue::finite(std::numeric_limits<double>::quiet_NaN()));
        }
    }
    rep.strictly_decreasing = rep.all_converged && rep.masses.size() == L_grid.size();
    for (std::size_t i = 0; i + 1 < rep.masses.size() && rep.strictly_decreasing; ++i)
        if (!(rep.masses[i].as_double() > rep.masses[i + 1].as_double()))
            rep.strictly_decreasing = false;
    return rep;
}

}  // namespace aggdiff::even_lambda
