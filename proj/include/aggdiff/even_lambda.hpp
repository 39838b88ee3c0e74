#pragma once

// Solver for even homogeneity lambda = 2n: the stationary density
//   rho_{beta,L}(r) = (q/(1-q))^{1/(1-q)}
//                     (r^{2n} + sum_i beta_i r^{2i} + L)^{-1/(1-q)}
// is determined by the (n-1)-dimensional fixed point beta_i = F_i(beta),
// solved by BFGS on the squared-residual functional I(beta) in log
// coordinates.  On top of the single-point solver: mass curves in the
// alpha parametrization, the critical exponent search, and m(L)
// monotonicity scans.

#include <optional>
#include <vector>

#include "aggdiff/core.hpp"
#include "aggdiff/quadrature.hpp"

namespace aggdiff::even_lambda {

const quadrature::QuadratureRule& default_rule();

struct BetaState {
    int dim = 0;
    int n = 0;  ///< lambda = 2n
    double q = 0.0;
    double L = 0.0;
    std::vector<double> beta;  ///< length n-1, all positive
    double residual = 0.0;     ///< auxiliary functional I at the solution
    bool converged = false;
};

/// Largest q-interval on which every moment entering the fixed-point system
/// converges: ((N-2)/(N+lambda-2), N/(N+2)).
void check_moment_range(int dim, int n, double q);

/// Pointwise density; +inf at r = 0 when L = 0.
double density_even(const BetaState& state, double r);

/// F_i(beta) = c_i int |y|^{2n-2i} rho_{beta,L}(y) dy for i = 1..n-1.
std::vector<double> fixed_point_map(int dim, int n, double q, double L,
                                    const std::vector<double>& beta,
                                    const quadrature::QuadratureRule& rule = default_rule());

/// d F_i / d beta_j = -(c_i/q) int |y|^{2n-2i+2j} rho_{beta,L}^{2-q} dy;
/// all entries negative.  Row-major (n-1) x (n-1).
std::vector<std::vector<double>> jacobian_fixed_point(
    int dim, int n, double q, double L, const std::vector<double>& beta,
    const quadrature::QuadratureRule& rule = default_rule());

/// I(beta) = sum_i (beta_i - F_i(beta))^2.
double residual_I(int dim, int n, double q, double L,
                  const std::vector<double>& beta,
                  const quadrature::QuadratureRule& rule = default_rule());

/// Solve the fixed point (trivial for n = 1).  Convergence requires both
/// I < 1e-14 and max_i |beta_i - F_i| < 1e-7 max(1, beta_i).
BetaState solve_betas(int dim, int n, double q, double L,
                      const std::optional<std::vector<double>>& init = {},
                      const quadrature::QuadratureRule& rule = default_rule());

/// Mass of the converged state; divergent iff L = 0 and q >= (N-2)/N.
MassValue mass_even(const BetaState& state,
                    const quadrature::QuadratureRule& rule = default_rule());

struct MassCurvePoint {
    double alpha = 0.0;
    double q = 0.0;
    MassValue m0;
    double residual = 0.0;
    bool converged = false;
};

/// One L = 0 solve per alpha (ascending), warm-started by continuation.
/// Failed points are recorded with converged = false and the sweep goes on.
std::vector<MassCurvePoint> mass_curve(int dim, int n,
                                       const std::vector<double>& alpha_grid,
                                       const quadrature::QuadratureRule& rule = default_rule());

struct CriticalPoint {
    double q_crit = 0.0;
    double alpha_crit = 0.0;
};

/// Bisection for m(0; q) = 1 on (N/(N+lambda)+eps, (N-2)/N-eps).  Returns
/// nullopt when the mass stays above 1 (no concentration).  An 8-point
/// pre-scan validates that m(0) increases with q; a violation throws.
std::optional<CriticalPoint> critical_q_even(int dim, int n, double tol,
                                             const quadrature::QuadratureRule& rule = default_rule());

struct MonotonicityReport {
    std::vector<double> L_grid;
    std::vector<MassValue> masses;
    std::vector<bool> converged;
    bool strictly_decreasing = false;
    bool all_converged = false;
};

/// Mass along an ascending L grid with warm starts.
MonotonicityReport monotonicity_scan(int dim, int n, double q,
                                     const std::vector<double>& L_grid,
                                     const quadrature::QuadratureRule& rule = default_rule());

}  // namespace aggdiff::even_lambda
