// AVX2+FMA variants.  This translation unit is compiled with -mavx2 -mfma;
// nothing here runs unless the dispatcher verified CPU support first.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace aggdiff::kern::detail {

static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sw = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void matvec_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i)
        y[i] = dot_avx2(a + i * cols, x, cols);
}

double weighted_sq_dev_avx2(const double* w, const double* a, const double* b,
                            std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_mul_pd(d, d), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += w[i] * d * d;
    }
    return s;
}

double weighted_abs_dev_avx2(const double* w, const double* a, const double* b,
                             std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_andnot_pd(signmask, d), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * std::fabs(a[i] - b[i]);
    return s;
}

void abs2_poly_eval_avx2(const double* cre, const double* cim,
                         std::size_t ncoeff, const double* u, double* out,
                         std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d uv = _mm256_loadu_pd(u + i);
        __m256d re = _mm256_setzero_pd();
        __m256d im = _mm256_setzero_pd();
        for (std::size_t k = ncoeff; k-- > 0;) {
            re = _mm256_fmadd_pd(re, uv, _mm256_set1_pd(cre[k]));
            im = _mm256_fmadd_pd(im, uv, _mm256_set1_pd(cim[k]));
        }
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(re, re), _mm256_mul_pd(im, im)));
    }
    for (; i < n; ++i) {
        const double ui = u[i];
        double re = 0.0, im = 0.0;
        for (std::size_t k = ncoeff; k-- > 0;) {
            const double re2 = re * ui + cre[k];
            im = im * ui + cim[k];
            re = re2;
        }
        out[i] = re * re + im * im;
    }
}

}  // namespace aggdiff::kern::detail

#endif  // x86-64
