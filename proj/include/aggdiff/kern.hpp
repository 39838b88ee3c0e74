#pragma once

// Batch arithmetic kernels used by the quadrature and grid solvers.
//
// Every operation has a scalar reference implementation and may have
// SIMD variants (AVX2+FMA on x86-64).  The active variant is selected
// at runtime from CPU capabilities; tests pin backends explicitly and
// check that all available variants agree.

#include <cstddef>
#include <string>

namespace aggdiff::kern {

enum class Backend { Scalar, Avx2 };

/// Backend currently used by the dispatch table.
Backend active_backend();

/// True if the backend can run on this CPU (Scalar always can).
bool backend_supported(Backend b);

/// Force a specific backend; throws std::invalid_argument if unsupported.
void force_backend(Backend b);

/// Reset to the best backend the CPU supports.
void auto_select_backend();

std::string backend_name(Backend b);

/// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

/// Row-major dense mat-vec: y[i] = sum_j a[i*cols+j] * x[j].
void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y);

/// sum_i w[i]*(a[i]-b[i])^2
double weighted_sq_dev(const double* w, const double* a, const double* b,
                       std::size_t n);

/// sum_i w[i]*|a[i]-b[i]|
double weighted_abs_dev(const double* w, const double* a, const double* b,
                        std::size_t n);

/// out[i] = |P(u[i])|^2 for the complex polynomial with coefficients
/// cre[k] + i*cim[k], k = 0..ncoeff-1 (monomial order, Horner evaluation).
void abs2_poly_eval(const double* cre, const double* cim, std::size_t ncoeff,
                    const double* u, double* out, std::size_t n);

/// out[i] = x[i]^e.  Scalar on every backend (libm pow keeps the accuracy
/// contract; there is no vector variant).
void pow_apply(const double* x, double e, double* out, std::size_t n);

}  // namespace aggdiff::kern
