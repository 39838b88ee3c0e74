#pragma once

// Bracketed scalar root finding (Brent) and quasi-Newton minimization
// (BFGS with Armijo backtracking, optional finite-difference gradients).

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace aggdiff::numerics {

struct RootConfig {
    double abs_tol = 1e-12;
    int max_iter = 200;
};

struct RootError : std::runtime_error {
    double best_lo, best_hi;
    RootError(const std::string& msg, double lo, double hi)
        : std::runtime_error(msg), best_lo(lo), best_hi(hi) {}
};

/// Root of a continuous f on [a,b] with f(a) f(b) <= 0; Brent iteration,
/// never leaves the bracket, final bracket width <= abs_tol.
double find_root_bracketed(const std::function<double(double)>& f, double a,
                           double b, const RootConfig& cfg = {});

struct QuasiNewtonConfig {
    double grad_tol = 1e-10;
    double step_tol = 1e-14;
    int max_iter = 500;
    double fd_step = 1e-7;        ///< central-difference step scale
    bool check_gradient = false;  ///< compare analytic vs FD gradient at x0
};

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    double grad_norm = 0.0;  ///< max-norm of the last gradient
    int iterations = 0;
    bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;
using Gradient = std::function<std::vector<double>(const std::vector<double>&)>;

/// BFGS with backtracking Armijo line search (c1 = 1e-4, factor 0.5).
/// Non-finite objective values during the line search are treated as
/// rejections (the search backtracks around them); a non-finite objective
/// at x0 throws.  Without an analytic gradient, central finite differences
/// with step fd_step*max(1,|x_i|) are used.
MinimizeResult minimize_quasi_newton(const Objective& obj,
                                     const std::optional<Gradient>& grad,
                                     std::vector<double> x0,
                                     const QuasiNewtonConfig& cfg = {});

}  // namespace aggdiff::numerics
