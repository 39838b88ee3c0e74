#include "aggdiff/numerics.hpp"

#include <cmath>
#include <limits>

namespace aggdiff::numerics {

double find_root_bracketed(const std::function<double(double)>& f, double a,
                           double b, const RootConfig& cfg) {
    if (!(cfg.abs_tol > 0.0) || cfg.max_iter < 10)
        throw std::invalid_argument("find_root_bracketed: bad config");
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (!(fa * fb < 0.0))
        throw std::invalid_argument("find_root_bracketed: endpoints do not bracket a root");

    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 0.5 * cfg.abs_tol + 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b);
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            // secant / inverse quadratic
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    throw RootError("find_root_bracketed: max iterations exceeded",
                    std::min(b, c), std::max(b, c));
}

namespace {

std::vector<double> fd_gradient(const Objective& obj, const std::vector<double>& x,
                                double fd_step) {
    const std::size_t n = x.size();
    std::vector<double> g(n), xp = x;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = fd_step * std::max(1.0, std::fabs(x[i]));
        xp[i] = x[i] + h;
        const double fp = obj(xp);
        xp[i] = x[i] - h;
        const double fm = obj(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double max_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

MinimizeResult minimize_quasi_newton(const Objective& obj,
                                     const std::optional<Gradient>& grad,
                                     std::vector<double> x0,
                                     const QuasiNewtonConfig& cfg) {
    if (cfg.max_iter < 50 || !(cfg.grad_tol > 0.0) || !(cfg.step_tol > 0.0) || !(cfg.fd_step > 0.0))
        throw std::invalid_argument("minimize_quasi_newton: bad config");
    const std::size_t n = x0.size();
    if (n == 0) return {x0, obj(x0), 0.0, 0, true};

    auto gradient = [&](const std::vector<double>& x) {
        return grad ? (*grad)(x) : fd_gradient(obj, x, cfg.fd_step);
    };

    double fx = obj(x0);
    if (!std::isfinite(fx))
        throw std::domain_error("minimize_quasi_newton: objective not finite at x0");

    std::vector<double> g = gradient(x0);
    if (cfg.check_gradient && grad) {
        const auto gfd = fd_gradient(obj, x0, cfg.fd_step);
        for (std::size_t i = 0; i < n; ++i) {
            const double scale = std::max({std::fabs(g[i]), std::fabs(gfd[i]), 1e-8});
            if (std::fabs(g[i] - gfd[i]) > 1e-6 * scale)
                throw std::domain_error("minimize_quasi_newton: analytic gradient fails FD check");
        }
    }

    // H approximates the inverse Hessian.
    std::vector<double> H(n * n, 0.0);
    auto reset_H = [&] {
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
    };
    reset_H();

    MinimizeResult res;
    res.x = x0;
    res.value = fx;

    std::vector<double> p(n), xnew(n), gnew(n), s(n), y(n), Hy(n);
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        res.iterations = iter + 1;
        // p = -H g
        double pg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * g[j];
            p[i] = -acc;
            pg += p[i] * g[i];
        }
        if (!(pg < 0.0)) {  // not a descent direction: steepest descent restart
            reset_H();
            pg = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = -g[i];
                pg -= g[i] * g[i];
            }
            if (pg == 0.0) {
                res.converged = true;
                res.grad_norm = max_norm(g);
                return res;
            }
        }

        double alpha = 1.0;
        double fnew = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xnew[i] = res.x[i] + alpha * p[i];
            fnew = obj(xnew);
            if (std::isfinite(fnew) && fnew <= fx + 1e-4 * alpha * pg) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            res.grad_norm = max_norm(g);
            res.converged = res.grad_norm < cfg.grad_tol;
            return res;
        }

        for (std::size_t i = 0; i < n; ++i) s[i] = xnew[i] - res.x[i];
        gnew = gradient(xnew);
        for (std::size_t i = 0; i < n; ++i) y[i] = gnew[i] - g[i];

        res.x = xnew;
        fx = fnew;
        res.value = fnew;
        g = gnew;
        res.grad_norm = max_norm(g);
        if (res.grad_norm < cfg.grad_tol || norm2(s) < cfg.step_tol) {
            res.converged = true;
            return res;
        }

        double ys = 0.0;
        for (std::size_t i = 0; i < n; ++i) ys += y[i] * s[i];
        if (ys <= 1e-12 * norm2(y) * norm2(s)) {
            reset_H();  // curvature condition failed
            continue;
        }
        // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
        const double rho = 1.0 / ys;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * y[j];
            Hy[i] = acc;
        }
        double yHy = 0.0;
        for (std::size_t i = 0; i < n; ++i) yHy += y[i] * Hy[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                H[i * n + j] += -rho * (s[i] * Hy[j] + Hy[i] * s[j]) +
                                rho * (1.0 + rho * yHy) * s[i] * s[j];
    }
    res.converged = res.grad_norm < cfg.grad_tol;
    return res;
}

}  // namespace aggdiff::numerics
