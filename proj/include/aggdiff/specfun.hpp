#pragma once

// Gamma/beta helpers, the Gauss hypergeometric function on [0,1], and the
// radial interaction kernel K(r,s) = spherical average of |r w - s w'|^lambda
// in its polynomial, closed-form (N=3), hypergeometric and quadrature-oracle
// representations.

#include <vector>

namespace aggdiff::specfun {

/// ln Gamma(x) for x > 0 via a Lanczos rational approximation
/// (relative error < 1e-13 on (0, 170]).
double log_gamma(double x);

/// ln B(a,b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a+b), a,b > 0.
double log_beta(double a, double b);

/// Surface area of the unit sphere in R^N: 2 pi^{N/2} / Gamma(N/2).
double sphere_area(int dim);

/// 2F1(a,b;c;z) for z in [0,1].
///
/// Branches: Gauss summation at z = 1 (requires c-a-b > 0 unless the series
/// terminates), the finite sum when a or b is a non-positive integer, the
/// direct series for z <= 0.75, and the z -> 1-z linear transformation
/// otherwise.  The transformation is degenerate when c-a-b is an integer;
/// callers that can shift parameters (the kernel does, via lambda) must do
/// so, this function throws.
double gauss_2f1(double a, double b, double c, double z);

/// Coefficients (c_1,...,c_{n-1}) of r^{2i} s^{2n-2i}, i = 1..n-1, in the
/// even-homogeneity kernel K(r,s) with lambda = 2n.  The end coefficients
/// (i = 0 and i = n) are always 1.  Palindromic: c_i = c_{n-i}.
std::vector<double> even_coefficients(int dim, int n);

enum class KernelMethod {
    EvenPolynomial,            ///< lambda in 2N: exact finite polynomial
    ClosedFormN3,              ///< N = 3 difference-of-powers closed form
    Hypergeometric,            ///< (r^2+s^2)^{lambda/2} 2F1(...)
    GegenbauerQuadratureOracle ///< direct angular quadrature (test oracle)
};

struct KernelDiag {
    bool lambda_perturbed = false;  ///< degenerate 2F1 handled by shifting lambda
    double lambda_used = 0.0;
};

/// K(r,s): symmetric in (r,s), homogeneous of degree lambda,
/// K(r,0) = r^lambda.  Throws std::invalid_argument for unsupported
/// method/parameter combinations.
double kernel_K(int dim, double lambda, double r, double s, KernelMethod method,
                KernelDiag* diag = nullptr);

/// Independent oracle: (|S^{N-2}|/|S^{N-1}|) * int_0^pi
/// (r^2+s^2-2 r s cos phi)^{lambda/2} sin^{N-2}(phi) dphi by adaptive
/// Gauss-Legendre quadrature.  Requires N >= 2.
double kernel_gegenbauer_oracle(int dim, double lambda, double r, double s);

/// K(r,s) - s^lambda, stable against the cancellation that the direct
/// subtraction suffers when s >> r: below (r/s)^2 = 0.01 the value is summed
/// from the expansion K/s^lambda = 1 + sum_j h_j (r/s)^{2j} whose
/// coefficients generalize the even-lambda kernel coefficients to any
/// homogeneity.
double kernel_diff(int dim, double lambda, double r, double s,
                   KernelMethod method);

}  // namespace aggdiff::specfun
