#include "aggdiff/core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace aggdiff {

void ProblemParams::validate() const {
    if (dim < 1) throw std::invalid_argument("ProblemParams: dimension must be >= 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("ProblemParams: lambda must be positive and finite");
    if (!(q > 0.0) || !(q < 1.0))
        throw std::invalid_argument("ProblemParams: q must lie in (0,1)");
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::UnboundedBelow: return "UnboundedBelow";
        case Regime::Admissible: return "Admissible";
        case Regime::QuarticFormal: return "QuarticFormal";
    }
    return "?";
}

Regime classify_regime(const ProblemParams& p) {
    p.validate();
    const double n = p.dim;
    if (p.q > p.q_low()) return Regime::Admissible;
    if (p.dim >= 3 && std::fabs(p.lambda - 4.0) <= 1e-12 &&
        p.q > (n - 2.0) / (n + 2.0) && p.q <= n / (n + 4.0))
        return Regime::QuarticFormal;
    return Regime::UnboundedBelow;
}

double alpha_from_q(const ProblemParams& p) {
    p.validate();
    const double n = p.dim;
    return (2.0 * n - p.q * (2.0 * n + p.lambda)) / (n * (1.0 - p.q));
}

double q_from_alpha(int dim, double lambda, double alpha) {
    if (dim < 1 || !(lambda > 0.0))
        throw std::invalid_argument("q_from_alpha: invalid (N, lambda)");
    const double n = dim;
    const double den = 2.0 * n + lambda - alpha * n;
    if (std::fabs(den) < 1e-14 * (2.0 * n + lambda))
        throw std::invalid_argument("q_from_alpha: degenerate denominator");
    return n * (2.0 - alpha) / den;
}

MassScaling rescale_mass(const ProblemParams& p, double m) {
    p.validate();
    if (!(m > 0.0)) throw std::invalid_argument("rescale_mass: mass must be positive");
    const double n = p.dim;
    const double den = n * (1.0 - p.q) - p.lambda;
    if (std::fabs(den) < 1e-14 * (n + p.lambda))
        throw std::invalid_argument("rescale_mass: degenerate scaling N(1-q) = lambda");
    MassScaling s;
    s.gamma2 = std::pow(m, (p.q - 2.0) / den);
    s.gamma1 = m * std::pow(s.gamma2, n);
    return s;
}

double el_prefactor(double q) {
    if (!(q > 0.0) || !(q < 1.0)) throw std::invalid_argument("el_prefactor: q outside (0,1)");
    return std::exp(std::log(q / (1.0 - q)) / (1.0 - q));
}

MassValue MassValue::infinite() {
    return {std::numeric_limits<double>::infinity(), true};
}

double MassValue::as_double() const {
    return divergent ? std::numeric_limits<double>::infinity() : value;
}

bool lambda_is_even(double lambda) {
    return lambda > 0.0 && std::fabs(lambda / 2.0 - std::round(lambda / 2.0)) < 1e-12;
}

}  // namespace aggdiff
