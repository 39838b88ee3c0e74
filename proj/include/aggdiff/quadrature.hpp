#pragma once

// Semi-infinite integrals of radial integrands with algebraic endpoint
// behavior.  Two modes: an adaptive composite Gauss-Legendre scheme on the
// u = r/(1+r) transform (default), and a plain uniform Riemann sum on a
// truncated interval retained for reproducing grid-based pipelines.

#include <functional>
#include <optional>
#include <stdexcept>

namespace aggdiff::quadrature {

enum class QuadMode { TransformedGauss, UniformRiemann };

struct QuadratureRule {
    QuadMode mode = QuadMode::TransformedGauss;
    int npoints = 64;      ///< Gauss panel order, or Riemann point count
    double r_max = 20.0;   ///< Riemann truncation radius
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_panels = 4096; ///< adaptive refinement budget

    static QuadratureRule gauss(double rel_tol = 1e-10, double abs_tol = 1e-14,
                                int order = 64);
    static QuadratureRule riemann(int npoints = 1000, double r_max = 20.0);
};

struct IntegralResult {
    double value = 0.0;
    double err_estimate = 0.0;  ///< +inf for UniformRiemann (no guarantee)
    long evaluations = 0;
};

/// Known power behavior of the integrand at the endpoints:
///   f(r) ~ C r^{origin_exponent}     as r -> 0   (exponent > -1)
///   f(r) ~ C r^{-decay_exponent}     as r -> inf (exponent > 1)
/// When supplied, the first/last panels are pre-split geometrically and the
/// residual endpoint pieces are added analytically, which keeps the stated
/// tolerance even for exponents close to the integrability boundary.
struct EndpointHints {
    std::optional<double> origin_exponent{};
    std::optional<double> decay_exponent{};
};

struct QuadratureError : std::runtime_error {
    double best_value;
    double err_estimate;
    QuadratureError(const std::string& msg, double best, double err)
        : std::runtime_error(msg), best_value(best), err_estimate(err) {}
};

IntegralResult integrate_semi_infinite(const std::function<double(double)>& f,
                                       const QuadratureRule& rule = {},
                                       const EndpointHints& hints = {});

/// Adaptive Gauss-Legendre on a finite interval [a,b].
IntegralResult integrate_interval(const std::function<double(double)>& f,
                                  double a, double b, double rel_tol = 1e-12,
                                  double abs_tol = 1e-15, int order = 64,
                                  int max_panels = 4096);

/// |S^{N-1}| * int_0^inf r^{k+N-1} profile(r) dr.
/// The hints describe the *profile*: its power at the origin and its decay
/// rate at infinity; the moment weight r^{k+N-1} is accounted for here.
IntegralResult weighted_moment(const std::function<double(double)>& profile,
                               int k, int dim,
                               const QuadratureRule& rule = {},
                               const EndpointHints& profile_hints = {});

}  // namespace aggdiff::quadrature
