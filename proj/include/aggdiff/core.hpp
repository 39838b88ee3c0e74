#pragma once

// Problem parameters for the homogeneous-attraction / fast-diffusion model,
// regime classification, the alpha <-> q reparametrization and mass
// rescaling of minimizers.

#include <string>

namespace aggdiff {

/// Dimension N >= 1, kernel homogeneity lambda > 0, diffusion exponent
/// q in (0,1).
struct ProblemParams {
    int dim = 3;
    double lambda = 4.0;
    double q = 0.5;

    /// Threshold q below (or at) which the free energy is unbounded from
    /// below: N/(N+lambda).
    double q_low() const { return double(dim) / (dim + lambda); }

    /// Throws std::invalid_argument if any field is out of domain.
    void validate() const;
};

enum class Regime {
    UnboundedBelow,  ///< q <= N/(N+lambda): no finite minimizer
    Admissible,      ///< q > N/(N+lambda): free energy bounded below
    QuarticFormal,   ///< lambda = 4, N >= 3, (N-2)/(N+2) < q <= N/(N+4):
                     ///< the stationary family exists but the energy is -inf
};

std::string regime_name(Regime r);

/// Classify (N, lambda, q).  The boundary q = N/(N+lambda) is excluded from
/// Admissible.  The QuarticFormal tag refines UnboundedBelow at lambda = 4.
Regime classify_regime(const ProblemParams& p);

/// alpha = (2N - q(2N+lambda)) / (N(1-q)); strictly decreasing in q, equal
/// to 1 at q = N/(N+lambda).
double alpha_from_q(const ProblemParams& p);

/// Inverse of alpha_from_q: q = N(2-alpha)/(2N + lambda - alpha*N).
/// Throws on a degenerate denominator.
double q_from_alpha(int dim, double lambda, double alpha);

/// Scaling (gamma1, gamma2) mapping the unit-mass minimizer to mass m:
/// gamma1*gamma2^{-N} = m and gamma1^{3-q}*gamma2^{-lambda-2N} = m.
struct MassScaling {
    double gamma1 = 1.0;
    double gamma2 = 1.0;
};

MassScaling rescale_mass(const ProblemParams& p, double m);

/// (q/(1-q))^{1/(1-q)}, the amplitude common to every stationary density.
double el_prefactor(double q);

/// A nonnegative quantity that may be infinite (e.g. the mass of a
/// stationary profile whose integral diverges at the origin).
struct MassValue {
    double value = 0.0;
    bool divergent = false;

    static MassValue finite(double v) { return {v, false}; }
    static MassValue infinite();

    /// value, or +inf when divergent
    double as_double() const;
};

/// Evenness test used wherever a specialized even-lambda path exists.
bool lambda_is_even(double lambda);

}  // namespace aggdiff
