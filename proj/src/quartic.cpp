#include "aggdiff/quartic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "aggdiff/numerics.hpp"
#include "aggdiff/specfun.hpp"

namespace aggdiff::quartic {

namespace {

void check_lemma_range(int dim, double q) {
    if (dim < 1) throw std::invalid_argument("quartic: N >= 1 required");
    const double n = dim;
    const double lo = std::max(0.0, (n - 2.0) / (n + 2.0));
    const double hi = n / (n + 2.0);
    if (!(q > lo && q < hi))
        throw std::invalid_argument("quartic: q outside (max(0,(N-2)/(N+2)), N/(N+2))");
}

double p_exp(double q) { return 1.0 / (1.0 - q); }

double kappa(int dim) { return 2.0 + 4.0 / dim; }

// ln c_{N,q} with c_{N,q} = (|S^{N-1}|/2) B((N+2)/2 - p, 2p - (N+2)/2).
double log_c_second(int dim, double q) {
    const double p = p_exp(q);
    const double x = 0.5 * (dim + 2.0) - p;
    const double y = 2.0 * p - 0.5 * (dim + 2.0);
    return std::log(0.5 * specfun::sphere_area(dim)) + specfun::log_beta(x, y);
}

}  // namespace

const quadrature::QuadratureRule& default_rule() {
    static const quadrature::QuadratureRule rule = quadrature::QuadratureRule::gauss(1e-11, 1e-15);
    return rule;
}

double second_moment_F(int dim, double q, double L, double B,
                       const quadrature::QuadratureRule& rule) {
    check_lemma_range(dim, q);
    if (!(B >= 0.0) || !(L >= 0.0) || !(B + L > 0.0))
        throw std::invalid_argument("second_moment_F: need B,L >= 0 with B + L > 0");
    const double p = p_exp(q);
    const auto integrand = [=](double r) {
        const double r2 = r * r;
        return std::pow(r, dim + 1) * std::pow(r2 * r2 + B * r2 + L, -p);
    };
    quadrature::EndpointHints h;
    h.origin_exponent = L > 0.0 ? dim + 1.0 : dim + 1.0 - 2.0 * p;
    h.decay_exponent = 4.0 * p - (dim + 1.0);
    const auto res = quadrature::integrate_semi_infinite(integrand, rule, h);
    return el_prefactor(q) * specfun::sphere_area(dim) * res.value;
}

double b_zero_closed_form(int dim, double q) {
    check_lemma_range(dim, q);
    const double p = p_exp(q);
    const double ex = 2.0 * p - 0.5 * dim;
    const double log_rhs = std::log(kappa(dim)) + log_c_second(dim, q) +
                           p * std::log(q / (1.0 - q));
    return std::exp(log_rhs / ex);
}

double solve_B(int dim, double q, double L, std::optional<double> bracket_hint,
               const quadrature::QuadratureRule& rule) {
    check_lemma_range(dim, q);
    if (!(L >= 0.0)) throw std::invalid_argument("solve_B: L >= 0 required");
    const double k = kappa(dim);
    const auto g = [&](double B) { return B - k * second_moment_F(dim, q, L, B, rule); };

    const double center = bracket_hint.value_or(b_zero_closed_form(dim, q));
    double lo = center * 1e-3, hi = center * 1e3;
    double glo = g(lo), ghi = g(hi);
    for (int tries = 0; tries < 8 && !(glo < 0.0 && ghi > 0.0); ++tries) {
        if (!(glo < 0.0)) { lo *= 0.1; glo = g(lo); }
        if (!(ghi > 0.0)) { hi *= 10.0; ghi = g(hi); }
    }
    if (!(glo < 0.0 && ghi > 0.0))
        throw std::runtime_error("solve_B: failed to bracket the fixed point");
    numerics::RootConfig rc;
    rc.abs_tol = 1e-13 * std::max(1.0, center);
    return numerics::find_root_bracketed(g, lo, hi, rc);
}

MassValue mass_at_with_B(int dim, double q, double L, double B,
                         const quadrature::QuadratureRule& rule) {
    check_lemma_range(dim, q);
    const double n = dim;
    if (L == 0.0 && q >= (n - 2.0) / n) return MassValue::infinite();
    const double p = p_exp(q);
    const auto integrand = [=](double r) {
        const double r2 = r * r;
        return std::pow(r, dim - 1) * std::pow(r2 * r2 + B * r2 + L, -p);
    };
    quadrature::EndpointHints h;
    h.origin_exponent = L > 0.0 ? dim - 1.0 : dim - 1.0 - 2.0 * p;
    h.decay_exponent = 4.0 * p - (dim - 1.0);
    const auto res = quadrature::integrate_semi_infinite(integrand, rule, h);
    return MassValue::finite(el_prefactor(q) * specfun::sphere_area(dim) * res.value);
}

MassValue mass_at(int dim, double q, double L, const quadrature::QuadratureRule& rule) {
    check_lemma_range(dim, q);
    const double n = dim;
    if (L == 0.0 && q >= (n - 2.0) / n) return MassValue::infinite();
    return mass_at_with_B(dim, q, L, solve_B(dim, q, L, {}, rule), rule);
}

MassValue mass_at_zero_closed_form(int dim, double q) {
    check_lemma_range(dim, q);
    const double n = dim;
    if (q >= (n - 2.0) / n) return MassValue::infinite();
    const double a = (n - 2.0) / (n + 2.0);
    const double b = (n - 2.0) / n;
    return MassValue::finite(0.5 * (q - a) / (b - q));
}

double critical_q4(int dim) {
    if (dim < 1) throw std::invalid_argument("critical_q4: N >= 1 required");
    const double n = dim;
    return (n - 2.0) * (3.0 * n + 4.0) / (3.0 * n * (n + 2.0));
}

QuarticSolution solve_minimizer_quartic(int dim, double q, bool allow_formal,
                                        const quadrature::QuadratureRule& rule) {
    ProblemParams params{dim, 4.0, q};
    const Regime regime = classify_regime(params);
    if (regime == Regime::UnboundedBelow)
        throw std::domain_error("solve_minimizer_quartic: free energy unbounded below at (N,q)");
    if (regime == Regime::QuarticFormal && !allow_formal)
        throw std::domain_error(
            "solve_minimizer_quartic: formal regime (infinite free energy); "
            "requires explicit opt-in");

    QuarticSolution sol;
    sol.dim = dim;
    sol.q = q;
    sol.formal = regime == Regime::QuarticFormal;

    const double n = dim;
    const MassValue m0 = mass_at_zero_closed_form(dim, q);
    if (!m0.divergent && m0.value < 1.0) {
        // No solution of m(L) = 1 exists; the minimizer concentrates.
        sol.L = 0.0;
        sol.B = solve_B(dim, q, 0.0, {}, rule);
        sol.atom = 1.5 * (critical_q4(dim) - q) / ((n - 2.0) / n - q);
        sol.mass = 1.0 - sol.atom;
        sol.branch = Branch::Concentrated;
        return sol;
    }
    if (!m0.divergent && m0.value == 1.0) {
        sol.L = 0.0;
        sol.B = solve_B(dim, q, 0.0, {}, rule);
        sol.mass = 1.0;
        sol.atom = 0.0;
        sol.branch = Branch::Boundary;
        return sol;
    }

    // m is continuous, strictly decreasing, m(0) >= 1 and m -> 0:
    // bracket and solve m(L*) = 1.
    double b_guess = b_zero_closed_form(dim, q);
    const auto mass_minus_one = [&](double L) {
        b_guess = solve_B(dim, q, L, b_guess, rule);
        return mass_at_with_B(dim, q, L, b_guess, rule).value - 1.0;
    };
    double lo = 0.0;
    if (m0.divergent) {
        lo = 1.0;
        while (!(mass_minus_one(lo) > 0.0) && lo > 1e-14) lo *= 0.1;
        if (!(mass_minus_one(lo) > 0.0))
            throw std::runtime_error("solve_minimizer_quartic: failed to bracket L* from below");
    } else if (!(mass_minus_one(0.0) > 0.0)) {
        // m(0) = 1 within quadrature resolution
        sol.L = 0.0;
        sol.B = solve_B(dim, q, 0.0, {}, rule);
        sol.mass = 1.0;
        sol.atom = 0.0;
        sol.branch = Branch::Boundary;
        return sol;
    }
    double hi = std::max(1.0, 2.0 * lo);
    int guard = 0;
    while (mass_minus_one(hi) > 0.0) {
        hi *= 2.0;
        if (++guard > 80)
            throw std::runtime_error("solve_minimizer_quartic: failed to bracket L* from above");
    }
    numerics::RootConfig rc;
    rc.abs_tol = 1e-12 * std::max(1.0, hi);
    const double Lstar = numerics::find_root_bracketed(mass_minus_one, lo, hi, rc);
    sol.L = Lstar;
    sol.B = solve_B(dim, q, Lstar, b_guess, rule);
    sol.mass = 1.0;
    sol.atom = 0.0;
    sol.branch = Lstar > 1e-10 ? Branch::Interior : Branch::Boundary;
    return sol;
}

double density_eval_quartic(const QuarticSolution& sol, double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("density_eval_quartic: r >= 0 required");
    if (r == 0.0 && sol.L == 0.0) return std::numeric_limits<double>::infinity();
    const double p = p_exp(sol.q);
    const double r2 = r * r;
    return el_prefactor(sol.q) * std::pow(r2 * r2 + sol.B * r2 + sol.L, -p);
}

double mass_derivative(int dim, double q, double L,
                       const quadrature::QuadratureRule& rule) {
    check_lemma_range(dim, q);
    if (!(L > 0.0)) throw std::invalid_argument("mass_derivative: L > 0 required");
    const double p = p_exp(q);
    const double B = solve_B(dim, q, L, {}, rule);
    const double amp = el_prefactor(q) * specfun::sphere_area(dim) / (1.0 - q);
    const auto phi = [=](double r) {
        const double r2 = r * r;
        return amp * std::pow(r, dim - 1) * std::pow(r2 * r2 + B * r2 + L, -p - 1.0);
    };
    const auto moment = [&](int k) {
        quadrature::EndpointHints h;
        h.origin_exponent = double(dim - 1 + k);
        h.decay_exponent = 4.0 * (p + 1.0) - (dim - 1.0 + k);
        const auto f = [&, k](double r) { return std::pow(r, k) * phi(r); };
        return quadrature::integrate_semi_infinite(f, rule, h).value;
    };
    const double i0 = moment(0), i2 = moment(2), i4 = moment(4);
    const double k = kappa(dim);
    const double Bprime = -k * i2 / (1.0 + k * i4);
    return -(i0 + Bprime * i2);
}

double free_energy_quartic(const std::function<double(double)>& density,
                           double M, int dim, double q, const ProfileTails& tails,
                           const quadrature::QuadratureRule& rule) {
    ProblemParams params{dim, 4.0, q};
    params.validate();
    if (!(M >= 0.0 && M <= 1.0))
        throw std::invalid_argument("free_energy_quartic: M must lie in [0,1]");
    if (!(q > dim / (dim + 4.0)))
        throw std::domain_error("free_energy_quartic: moments diverge for q <= N/(N+4)");

    quadrature::EndpointHints h;
    h.origin_exponent = tails.origin_power;
    h.decay_exponent = tails.decay_power;
    const auto m2 = quadrature::weighted_moment(density, 2, dim, rule, h);
    const auto m4 = quadrature::weighted_moment(density, 4, dim, rule, h);

    quadrature::EndpointHints hq;
    if (tails.origin_power) hq.origin_exponent = *tails.origin_power * q;
    if (tails.decay_power) hq.decay_exponent = *tails.decay_power * q;
    const auto rho_q = [&density, q](double r) { return std::pow(density(r), q); };
    const auto sq = quadrature::weighted_moment(rho_q, 0, dim, rule, hq);

    return m4.value + (1.0 + 2.0 / dim) * m2.value * m2.value - sq.value / (1.0 - q);
}

}  // namespace aggdiff::quartic
