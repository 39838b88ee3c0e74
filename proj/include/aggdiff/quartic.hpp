#pragma once

// Exact treatment of the quartic attraction (lambda = 4): the unique
// coefficient B(L) of the stationary family
//   rho_{B,L}(r) = (q/(1-q))^{1/(1-q)} (r^4 + B r^2 + L)^{-1/(1-q)},
// its mass m(L), the closed forms at L = 0, and the minimizer assembly
// with a possible concentrated atom at the origin.

#include <functional>
#include <optional>

#include "aggdiff/core.hpp"
#include "aggdiff/quadrature.hpp"

namespace aggdiff::quartic {

/// Shared quadrature defaults for this module.
const quadrature::QuadratureRule& default_rule();

enum class Branch {
    Interior,      ///< L > 0, atom = 0, mass = 1
    Concentrated,  ///< L = 0, atom > 0
    Boundary       ///< L = 0, atom = 0 (q exactly at the critical exponent)
};

struct QuarticSolution {
    int dim = 0;
    double q = 0.0;
    double L = 0.0;
    double B = 0.0;
    double mass = 0.0;  ///< integral of the absolutely continuous part
    double atom = 0.0;  ///< concentrated mass at the origin
    Branch branch = Branch::Interior;
    bool formal = false;  ///< true when solved in the QuarticFormal regime
};

/// Second moment F_L(B) = int |y|^2 rho_{B,L}(y) dy, strictly decreasing in
/// both B and L.  Valid for max(0,(N-2)/(N+2)) < q < N/(N+2); B, L >= 0 with
/// B + L > 0.
double second_moment_F(int dim, double q, double L, double B,
                       const quadrature::QuadratureRule& rule = default_rule());

/// The unique B with B = (2+4/N) F_L(B); decreasing in L.  An optional hint
/// centers the root bracket (useful for continuation along L sweeps).
double solve_B(int dim, double q, double L,
               std::optional<double> bracket_hint = {},
               const quadrature::QuadratureRule& rule = default_rule());

/// m(L) = int rho_{B(L),L}; divergent iff L = 0 and q >= (N-2)/N.
MassValue mass_at(int dim, double q, double L,
                  const quadrature::QuadratureRule& rule = default_rule());

/// Same, reusing an already-solved B.
MassValue mass_at_with_B(int dim, double q, double L, double B,
                         const quadrature::QuadratureRule& rule = default_rule());

/// m(0) = (1/2) (q - (N-2)/(N+2)) / ((N-2)/N - q) for q < (N-2)/N,
/// divergent otherwise.
MassValue mass_at_zero_closed_form(int dim, double q);

/// Closed form for B(0):
/// B(0)^{2/(1-q) - N/2} = (2+4/N) c_{N,q} (q/(1-q))^{1/(1-q)}.
double b_zero_closed_form(int dim, double q);

/// Critical diffusion exponent at lambda = 4:
/// q_N(4) = ((N-2)/(N+2)) (1 + 4/(3N)), increasing in N.
double critical_q4(int dim);

/// Unique minimizer for lambda = 4.  Requires the admissible regime
/// N/(N+4) < q < N/(N+2), or the QuarticFormal regime together with
/// allow_formal = true (the formal minimizer has infinite free energy).
QuarticSolution solve_minimizer_quartic(int dim, double q, bool allow_formal = false,
                                        const quadrature::QuadratureRule& rule = default_rule());

/// Pointwise density; +inf at r = 0 when L = 0.
double density_eval_quartic(const QuarticSolution& sol, double r);

/// m'(L) for L > 0 via the implicit derivative of B(L); strictly negative.
double mass_derivative(int dim, double q, double L,
                       const quadrature::QuadratureRule& rule = default_rule());

/// Power behavior of a radial profile, used to steer the quadrature.
struct ProfileTails {
    std::optional<double> origin_power{};  ///< rho ~ r^{origin_power} at 0
    std::optional<double> decay_power{};   ///< rho ~ r^{-decay_power} at inf
};

/// Radial free energy at lambda = 4:
///   int |x|^4 rho + (1 + 2/N) (int |x|^2 rho)^2 - (1/(1-q)) int rho^q.
/// The atom mass M enters only through the mass constraint and cancels.
/// Throws std::domain_error when q <= N/(N+4) (the integrals diverge).
double free_energy_quartic(const std::function<double(double)>& density,
                           double M, int dim, double q,
                           const ProfileTails& tails = {},
                           const quadrature::QuadratureRule& rule = default_rule());

}  // namespace aggdiff::quartic
