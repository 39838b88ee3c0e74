#include "aggdiff/kern.hpp"

#include <stdexcept>

namespace aggdiff::kern {

namespace detail {
double dot_scalar(const double*, const double*, std::size_t);
void matvec_scalar(const double*, std::size_t, std::size_t, const double*, double*);
double weighted_sq_dev_scalar(const double*, const double*, const double*, std::size_t);
double weighted_abs_dev_scalar(const double*, const double*, const double*, std::size_t);
void abs2_poly_eval_scalar(const double*, const double*, std::size_t, const double*, double*, std::size_t);
void pow_apply_scalar(const double*, double, double*, std::size_t);

#if defined(AGGDIFF_HAVE_AVX2)
double dot_avx2(const double*, const double*, std::size_t);
void matvec_avx2(const double*, std::size_t, std::size_t, const double*, double*);
double weighted_sq_dev_avx2(const double*, const double*, const double*, std::size_t);
double weighted_abs_dev_avx2(const double*, const double*, const double*, std::size_t);
void abs2_poly_eval_avx2(const double*, const double*, std::size_t, const double*, double*, std::size_t);
#endif
}  // namespace detail

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    void (*matvec)(const double*, std::size_t, std::size_t, const double*, double*);
    double (*wsq)(const double*, const double*, const double*, std::size_t);
    double (*wabs)(const double*, const double*, const double*, std::size_t);
    void (*abs2)(const double*, const double*, std::size_t, const double*, double*, std::size_t);
};

constexpr Table kScalarTable{detail::dot_scalar, detail::matvec_scalar,
                             detail::weighted_sq_dev_scalar,
                             detail::weighted_abs_dev_scalar,
                             detail::abs2_poly_eval_scalar};

#if defined(AGGDIFF_HAVE_AVX2)
constexpr Table kAvx2Table{detail::dot_avx2, detail::matvec_avx2,
                           detail::weighted_sq_dev_avx2,
                           detail::weighted_abs_dev_avx2,
                           detail::abs2_poly_eval_avx2};
#endif

bool cpu_has_avx2() {
#if defined(AGGDIFF_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    Backend backend;
    const Table* table;
    State() {
        if (cpu_has_avx2()) {
#if defined(AGGDIFF_HAVE_AVX2)
            backend = Backend::Avx2;
            table = &kAvx2Table;
            return;
#endif
        }
        backend = Backend::Scalar;
        table = &kScalarTable;
    }
};

State& state() {
    static State s;
    return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

bool backend_supported(Backend b) {
    return b == Backend::Scalar || (b == Backend::Avx2 && cpu_has_avx2());
}

void force_backend(Backend b) {
    if (!backend_supported(b))
        throw std::invalid_argument("kern: backend not supported on this CPU: " + backend_name(b));
    if (b == Backend::Scalar) {
        state().backend = Backend::Scalar;
        state().table = &kScalarTable;
    }
#if defined(AGGDIFF_HAVE_AVX2)
    else {
        state().backend = Backend::Avx2;
        state().table = &kAvx2Table;
    }
#endif
}

void auto_select_backend() {
    state() = State();
}

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "?";
}

double dot(const double* a, const double* b, std::size_t n) {
    return state().table->dot(a, b, n);
}

void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y) {
    state().table->matvec(a, rows, cols, x, y);
}

double weighted_sq_dev(const double* w, const double* a, const double* b, std::size_t n) {
    return state().table->wsq(w, a, b, n);
}

double weighted_abs_dev(const double* w, const double* a, const double* b, std::size_t n) {
    return state().table->wabs(w, a, b, n);
}

void abs2_poly_eval(const double* cre, const double* cim, std::size_t ncoeff,
                    const double* u, double* out, std::size_t n) {
    state().table->abs2(cre, cim, ncoeff, u, out, n);
}

void pow_apply(const double* x, double e, double* out, std::size_t n) {
    detail::pow_apply_scalar(x, e, out, n);
}

}  // namespace aggdiff::kern
