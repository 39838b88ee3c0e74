#pragma once

// Stationary states for arbitrary homogeneity lambda > 0 at L = 0 through
// the substitution rho_f(r)^{q-1} = r^2 (1+r)^{lambda-2} f(r): the
// self-consistency map Phi on f, its discretization with f = |P(u)|^2 for a
// complex polynomial P in u = r/(1+r), and least-squares minimization of the
// weighted L^2 distance between f^{-1/(1-q)} and Phi(f)^{-1/(1-q)}.

#include <complex>
#include <optional>
#include <vector>

#include "aggdiff/core.hpp"
#include "aggdiff/quadrature.hpp"

namespace aggdiff::general_lambda {

struct PolyAnsatz {
    std::vector<std::complex<double>> coeffs;  ///< monomial order, c_0 first

    int degree() const { return int(coeffs.size()) - 1; }
    std::complex<double> P(double u) const;
    double f(double u) const;  ///< |P(u)|^2
};

struct GeneralSolution {
    ProblemParams params;
    PolyAnsatz ansatz;
    quadrature::QuadratureRule grid;
    double l2_residual = 0.0;
    double l1_error = 0.0;
    double mass = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// rho_f(r) = [r^2 (1+r)^{lambda-2} |P(r/(1+r))|^2]^{-1/(1-q)}.
/// Throws if P vanishes at r/(1+r).
double density_from_f(const ProblemParams& p, const PolyAnsatz& ansatz, double r);

/// C(r,s) = [K(r,s) - s^lambda] r^{-2} (1+r)^{2-lambda}
///          s^{N-1-2/(1-q)} (1+s)^{-(lambda-2)/(1-q)}.
double c_kernel(const ProblemParams& p, double r, double s);

/// Phi(f) evaluated at the given radii.  UniformRiemann discretizes the
/// inner integrals on the rule's own grid; TransformedGauss integrates them
/// adaptively.
std::vector<double> phi_map(const ProblemParams& p, const PolyAnsatz& ansatz,
                            const std::vector<double>& r_grid,
                            const quadrature::QuadratureRule& quad);

/// int w(s) (f^{-1/(1-q)} - Phi(f)^{-1/(1-q)})^2 ds with
/// w(s) = s^{N-1-2/(1-q)} (1+s)^{-(lambda-2)/(1-q)}.
double residual_l2(const ProblemParams& p, const PolyAnsatz& ansatz,
                   const quadrature::QuadratureRule& quad);

/// (q/(1-q))^{1/(1-q)} |S^{N-1}| int w(s) |f^{-1/(1-q)} - Phi(f)^{-1/(1-q)}| ds;
/// bounds the L^1 distance between the corresponding densities.
double l1_error(const ProblemParams& p, const PolyAnsatz& ansatz,
                const quadrature::QuadratureRule& quad);

/// Mass of rho_f under the given rule.
double mass_of_ansatz(const ProblemParams& p, const PolyAnsatz& ansatz,
                      const quadrature::QuadratureRule& quad);

struct SolveOptions {
    bool allow_formal = false;
    int max_iter = 1500;
    int restarts = 2;
    double l1_threshold = 1e-4;  ///< convergence bar on the grid L^1 error
    std::optional<PolyAnsatz> init{};
    /// After grid convergence, refine the coefficients against the
    /// continuous (adaptively integrated) self-consistency map, removing
    /// the grid truncation bias.  Used by the exact-case recovery paths.
    bool polish_continuous = false;
};

/// Minimize residual_l2 over the coefficients of P (finite differences,
/// BFGS).  Gauge: P(1) is pinned to the positive real value sqrt((1-q)/q)
/// demanded by the large-r amplitude of stationary densities, which also
/// removes the global phase freedom.
GeneralSolution solve_general(const ProblemParams& p, int degree = 10,
                              const quadrature::QuadratureRule& grid =
                                  quadrature::QuadratureRule::riemann(1000, 20.0),
                              const SolveOptions& opts = {});

/// Mass of a converged solution on its own grid.
double mass_general(const GeneralSolution& sol);

struct CriticalPoint {
    double q_crit = 0.0;
    double alpha_crit = 0.0;
    double l1_at_crossing = 0.0;
    bool converged = true;
};

/// Bisection of mass(q) = 1 with continuation in q; nullopt when the mass
/// stays above 1 on the admissible window.  The pre-scan enforces
/// monotonicity of the mass in q, mirroring the even-lambda search.
std::optional<CriticalPoint> critical_q_general(
    int dim, double lambda, double tol, int degree = 10,
    const quadrature::QuadratureRule& grid = quadrature::QuadratureRule::riemann(1000, 20.0));

/// Radial free energy for general lambda:
///   -(1/(1-q)) int rho^q + M int |x|^lambda rho
///   + (1/2) |S^{N-1}|^2 int int r^{N-1} s^{N-1} rho(r) K(r,s) rho(s) dr ds.
/// Power hints for rho (at 0 and infinity) keep the quadrature within
/// tolerance; diverging integrals throw std::domain_error.
struct ProfileTails {
    std::optional<double> origin_power{};
    std::optional<double> decay_power{};
};

double free_energy_radial(const ProblemParams& p,
                          const std::function<double(double)>& density, double M,
                          const ProfileTails& tails = {},
                          double rel_tol = 1e-9);

}  // namespace aggdiff::general_lambda
