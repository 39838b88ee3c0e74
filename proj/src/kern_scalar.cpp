#include "aggdiff/kern.hpp"

#include <cmath>

namespace aggdiff::kern::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void matvec_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i)
        y[i] = dot_scalar(a + i * cols, x, cols);
}

double weighted_sq_dev_scalar(const double* w, const double* a, const double* b,
                              std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += w[i] * d * d;
    }
    return s;
}

double weighted_abs_dev_scalar(const double* w, const double* a, const double* b,
                               std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * std::fabs(a[i] - b[i]);
    return s;
}

void abs2_poly_eval_scalar(const double* cre, const double* cim,
                           std::size_t ncoeff, const double* u, double* out,
                           std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = u[i];
        double re = 0.0, im = 0.0;
        for (std::size_t k = ncoeff; k-- > 0;) {
            const double re2 = re * ui + cre[k];
            im = im * ui + cim[k];
            re = re2;
        }
        const double rr = re * re;
        const double ii = im * im;
        out[i] = rr + ii;
    }
}

void pow_apply_scalar(const double* x, double e, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(x[i], e);
}

}  // namespace aggdiff::kern::detail
