#include "aggdiff/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "aggdiff/core.hpp"
#include "aggdiff/quadrature.hpp"

namespace aggdiff::specfun {

namespace {

constexpr double kPi = std::numbers::pi;

// Lanczos approximation, g = 607/128, 15 terms.
constexpr double kLanczosG = 607.0 / 128.0;
constexpr double kLanczos[15] = {
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
};

bool is_nonpositive_integer(double x, double tol = 1e-12) {
    return x <= tol && std::fabs(x - std::round(x)) < tol;
}

// ln|Gamma(x)| with sign, valid for all non-integer x (reflection for x <= 0).
double log_gamma_signed(double x, int& sign) {
    sign = 1;
    if (x > 0.0) return log_gamma(x);
    if (is_nonpositive_integer(x))
        throw std::domain_error("log_gamma_signed: pole at non-positive integer");
    // Gamma(x) Gamma(1-x) = pi / sin(pi x)
    const double s = std::sin(kPi * x);
    sign = s < 0.0 ? -1 : 1;
    return std::log(kPi / std::fabs(s)) - log_gamma(1.0 - x);
}

// Direct series sum_{k} (a)_k (b)_k / (c)_k z^k / k!.
double series_2f1(double a, double b, double c, double z) {
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 100000; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if (std::fabs(term) <= 1e-16 * std::fabs(sum)) return sum;
    }
    throw std::runtime_error("gauss_2f1: series did not converge within 100000 terms");
}

// Finite sum when a (or b) is a non-positive integer.
double terminating_2f1(double a, double b, double c, double z) {
    int kmax;
    if (is_nonpositive_integer(a) && is_nonpositive_integer(b))
        kmax = int(-std::round(std::max(a, b)));
    else if (is_nonpositive_integer(a))
        kmax = int(-std::round(a));
    else
        kmax = int(-std::round(b));
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < kmax; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
    }
    return sum;
}

// Gamma(n1) Gamma(n2) / (Gamma(d1) Gamma(d2)); zero when a denominator
// argument sits on a pole of Gamma.
double gamma_ratio(double n1, double n2, double d1, double d2) {
    if (is_nonpositive_integer(d1) || is_nonpositive_integer(d2)) return 0.0;
    int s1, s2, s3, s4;
    const double lg = log_gamma_signed(n1, s1) + log_gamma_signed(n2, s2) -
                      log_gamma_signed(d1, s3) - log_gamma_signed(d2, s4);
    return s1 * s2 * s3 * s4 * std::exp(lg);
}

double gauss_summation(double a, double b, double c) {
    return gamma_ratio(c, c - a - b, c - a, c - b);
}

// z -> 1-z linear transformation; requires c-a-b non-integer.
double connection_2f1(double a, double b, double c, double z) {
    const double w = 1.0 - z;
    const double cab = c - a - b;
    const double g1 = gamma_ratio(c, cab, c - a, c - b);
    const double g2 = gamma_ratio(c, -cab, a, b);
    const double t1 = g1 == 0.0 ? 0.0 : g1 * series_2f1(a, b, a + b - c + 1.0, w);
    const double t2 =
        g2 == 0.0 ? 0.0 : g2 * std::pow(w, cab) * series_2f1(c - a, c - b, cab + 1.0, w);
    return t1 + t2;
}

// Generalized binomial coefficient C(alpha, k) for real alpha, integer k >= 0.
double binom_real(double alpha, int k) {
    double v = 1.0;
    for (int j = 0; j < k; ++j) v *= (alpha - j) / (j + 1.0);
    return v;
}

double ipow(double x, int k) {
    double v = 1.0;
    while (k-- > 0) v *= x;
    return v;
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
    // Gamma(x) = sqrt(2 pi) t^{x-1/2} e^{-t} A(x-1), t = x + g - 1/2.
    double acc = kLanczos[0];
    for (int k = 1; k < 15; ++k) acc += kLanczos[k] / (x - 1.0 + k);
    const double t = x + kLanczosG - 0.5;
    return 0.5 * std::log(2.0 * kPi) + (x - 0.5) * std::log(t) - t + std::log(acc);
}

double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double sphere_area(int dim) {
    if (dim < 1) throw std::invalid_argument("sphere_area: N >= 1 required");
    return 2.0 * std::pow(kPi, 0.5 * dim) / std::exp(log_gamma(0.5 * dim));
}

double gauss_2f1(double a, double b, double c, double z) {
    if (is_nonpositive_integer(c))
        throw std::domain_error("gauss_2f1: c is a non-positive integer");
    if (!(z >= 0.0 && z <= 1.0))
        throw std::domain_error("gauss_2f1: z outside [0,1]");
    if (z == 0.0) return 1.0;
    const bool terminating = is_nonpositive_integer(a) || is_nonpositive_integer(b);
    if (z == 1.0) {
        if (c - a - b > 0.0) return gauss_summation(a, b, c);
        if (terminating) return terminating_2f1(a, b, c, 1.0);
        throw std::domain_error("gauss_2f1: divergent at z = 1 (c-a-b <= 0)");
    }
    if (terminating) return terminating_2f1(a, b, c, z);
    if (z <= 0.75) return series_2f1(a, b, c, z);
    if (std::fabs(c - a - b - std::round(c - a - b)) < 1e-9)
        throw std::domain_error(
            "gauss_2f1: degenerate connection formula (c-a-b integer); "
            "shift parameters before calling");
    return connection_2f1(a, b, c, z);
}

std::vector<double> even_coefficients(int dim, int n) {
    if (dim < 1 || n < 1) throw std::invalid_argument("even_coefficients: N >= 1, n >= 1");
    // K(r,s) = (r^2+s^2)^n * 2F1((1-n)/2, -n/2; N/2; 4 r^2 s^2/(r^2+s^2)^2);
    // the series terminates at kmax = floor(n/2).  Expanding the powers of
    // (r^2+s^2) gives the coefficient of r^{2i} s^{2(n-i)} exactly.
    const double a = 0.5 * (1.0 - n), b = -0.5 * n, c = 0.5 * dim;
    const int kmax = n / 2;
    std::vector<double> g(kmax + 1);
    g[0] = 1.0;
    for (int k = 0; k < kmax; ++k)
        g[k + 1] = g[k] * (a + k) * (b + k) / ((c + k) * (k + 1.0));
    std::vector<double> coef(std::max(0, n - 1));
    for (int i = 1; i <= n - 1; ++i) {
        double ci = 0.0;
        for (int k = 0; k <= kmax; ++k) {
            if (k > i || k > n - i) continue;
            ci += g[k] * ipow(4.0, k) * binom_real(double(n - 2 * k), i - k);
        }
        coef[i - 1] = ci;
    }
    return coef;
}

namespace {

const std::vector<double>& cached_even_coefficients(int dim, int n) {
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find({dim, n});
    if (it == cache.end())
        it = cache.emplace(std::make_pair(dim, n), even_coefficients(dim, n)).first;
    return it->second;
}

double kernel_even_poly(int dim, double lambda, double r, double s) {
    const int n = int(std::round(lambda / 2.0));
    const auto& c = cached_even_coefficients(dim, n);
    const double r2 = r * r, s2 = s * s;
    // sum_{i=0}^{n} c_i r^{2i} s^{2(n-i)} with c_0 = c_n = 1
    double sum = ipow(s2, n) + ipow(r2, n);
    for (int i = 1; i <= n - 1; ++i) sum += c[i - 1] * ipow(r2, i) * ipow(s2, n - i);
    return sum;
}

double kernel_closed_n3(double lambda, double r, double s) {
    const double M = std::max(r, s), m = std::min(r, s);
    const double u = m / M;
    if (u < 1e-4) {
        // [(1+u)^{lambda+2} - (1-u)^{lambda+2}] / (2 (lambda+2) u) expanded in u;
        // the direct difference cancels catastrophically for m << M.
        double acc = 0.0;
        for (int j = 3; j >= 0; --j)
            acc = acc * (u * u) + binom_real(lambda + 2.0, 2 * j + 1);
        return std::pow(M, lambda) * acc / (lambda + 2.0);
    }
    const double num = std::pow(r + s, lambda + 2.0) - std::pow(std::fabs(r - s), lambda + 2.0);
    return num / (2.0 * (lambda + 2.0) * r * s);
}

double kernel_hyper(int dim, double lambda, double r, double s, KernelDiag* diag) {
    double lam = lambda;
    // c-a-b = (N-1)/2 + lambda/2; an integer value (odd lambda with even N)
    // degenerates the z->1-z transformation.  Even lambda terminates before
    // reaching it, so a small shift of lambda covers the remaining cases.
    const double cab = 0.5 * (dim - 1.0) + 0.5 * lam;
    if (!aggdiff::lambda_is_even(lam) && std::fabs(cab - std::round(cab)) < 1e-9) {
        lam += 1e-7;
        if (diag) {
            diag->lambda_perturbed = true;
            diag->lambda_used = lam;
        }
    }
    const double r2 = r * r, s2 = s * s;
    const double sumsq = r2 + s2;
    double z = 4.0 * r2 * s2 / (sumsq * sumsq);
    z = std::min(z, 1.0);
    return std::pow(sumsq, 0.5 * lam) *
           gauss_2f1(0.25 * (2.0 - lam), -0.25 * lam, 0.5 * dim, z);
}

bool aggdiff_lambda_even(double lambda) { return aggdiff::lambda_is_even(lambda); }

}  // namespace

double kernel_K(int dim, double lambda, double r, double s, KernelMethod method,
                KernelDiag* diag) {
    if (dim < 1 || !(lambda > 0.0) || !(r >= 0.0) || !(s >= 0.0))
        throw std::invalid_argument("kernel_K: invalid arguments");
    if (diag) *diag = KernelDiag{false, lambda};
    if (r == 0.0 || s == 0.0) {
        const double M = std::max(r, s);
        return M == 0.0 ? 0.0 : std::pow(M, lambda);
    }
    switch (method) {
        case KernelMethod::EvenPolynomial:
            if (!aggdiff_lambda_even(lambda))
                throw std::invalid_argument("kernel_K: EvenPolynomial requires even lambda");
            return kernel_even_poly(dim, lambda, r, s);
        case KernelMethod::ClosedFormN3:
            if (dim != 3)
                throw std::invalid_argument("kernel_K: ClosedFormN3 requires N = 3");
            return kernel_closed_n3(lambda, r, s);
        case KernelMethod::Hypergeometric:
            return kernel_hyper(dim, lambda, r, s, diag);
        case KernelMethod::GegenbauerQuadratureOracle:
            return kernel_gegenbauer_oracle(dim, lambda, r, s);
    }
    throw std::invalid_argument("kernel_K: unknown method");
}

namespace {

// Coefficients h_j of K(r,s)/s^lambda = 1 + sum_{j>=1} h_j (r/s)^{2j},
// from composing the hypergeometric series with z = 4t/(1+t)^2:
//   h_j = sum_k g_k 4^k C(lambda/2 - 2k, j - k).
std::vector<double> small_ratio_coeffs(int dim, double lambda, int J) {
    const double a = 0.25 * (2.0 - lambda), b = -0.25 * lambda, c = 0.5 * dim;
    std::vector<double> g(J + 1);
    g[0] = 1.0;
    // self-terminating for even lambda: a factor reaches exactly zero
    for (int k = 0; k < J; ++k)
        g[k + 1] = g[k] * (a + k) * (b + k) / ((c + k) * (k + 1.0));
    std::vector<double> h(J + 1, 0.0);
    for (int j = 1; j <= J; ++j)
        for (int k = 0; k <= j; ++k)
            h[j] += g[k] * ipow(4.0, k) * binom_real(0.5 * lambda - 2.0 * k, j - k);
    return h;
}

const std::vector<double>& cached_small_ratio_coeffs(int dim, double lambda) {
    static std::map<std::pair<int, double>, std::vector<double>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find({dim, lambda});
    if (it == cache.end())
        it = cache.emplace(std::make_pair(dim, lambda), small_ratio_coeffs(dim, lambda, 8))
                 .first;
    return it->second;
}

}  // namespace

double kernel_diff(int dim, double lambda, double r, double s, KernelMethod method) {
    if (dim < 1 || !(lambda > 0.0) || !(r >= 0.0) || !(s >= 0.0))
        throw std::invalid_argument("kernel_diff: invalid arguments");
    if (r == 0.0) return 0.0;
    if (s == 0.0) return std::pow(r, lambda);
    if (s > r) {
        const double t = (r / s) * (r / s);
        if (t < 0.01) {
            const auto& h = cached_small_ratio_coeffs(dim, lambda);
            double acc = 0.0;
            for (int j = int(h.size()) - 1; j >= 1; --j) acc = acc * t + h[j];
            return std::pow(s, lambda) * acc * t;
        }
    }
    return kernel_K(dim, lambda, r, s, method) - std::pow(s, lambda);
}

double kernel_gegenbauer_oracle(int dim, double lambda, double r, double s) {
    if (dim < 2)
        throw std::invalid_argument("kernel_gegenbauer_oracle: N >= 2 required");
    if (r == 0.0 || s == 0.0) {
        const double M = std::max(r, s);
        return M == 0.0 ? 0.0 : std::pow(M, lambda);
    }
    const double ratio = sphere_area(dim - 1) / sphere_area(dim);
    const auto integrand = [&](double phi) {
        const double d2 = r * r + s * s - 2.0 * r * s * std::cos(phi);
        const double base = d2 <= 0.0 ? 0.0 : std::pow(d2, 0.5 * lambda);
        return dim == 2 ? base : base * std::pow(std::sin(phi), double(dim - 2));
    };
    const auto res = quadrature::integrate_interval(integrand, 0.0, kPi, 1e-12, 1e-15);
    return ratio * res.value;
}

}  // namespace aggdiff::specfun
