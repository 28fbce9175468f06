#include "meagraph/kernels.hpp"

#include <algorithm>

#if defined(__x86_64__) || defined(_M_X64)
#define MEAGRAPH_X86 1
#include <immintrin.h>
#endif

// AVX2/FMA variants. Compiled with per-function target attributes so the
// translation unit builds without -mavx2; the dispatcher guarantees these
// are only called when CPUID reports avx2+fma.
namespace meagraph::kernels::detail::avx2 {

#ifdef MEAGRAPH_X86

#define MG_TARGET_AVX2 __attribute__((target("avx2,fma")))

MG_TARGET_AVX2
static inline double hsum256(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

MG_TARGET_AVX2
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d av = _mm256_set1_pd(arow[p]);
            const double* brow = b + p * n;
            std::size_t j = 0;
            for (; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
                _mm256_storeu_pd(crow + j, cv);
            }
            const double as = arow[p];
            for (; j < n; ++j) crow[j] += as * brow[j];
        }
    }
}

MG_TARGET_AVX2
double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    double r = hsum256(acc);
    for (; i < n; ++i) r += x[i] * y[i];
    return r;
}

MG_TARGET_AVX2
double sqdist(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double r = hsum256(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        r += d * d;
    }
    return r;
}

MG_TARGET_AVX2
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

MG_TARGET_AVX2
void add(const double* x, const double* y, double* z, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) z[i] = x[i] + y[i];
}

MG_TARGET_AVX2
void sub(const double* x, const double* y, double* z, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        _mm256_storeu_pd(z + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) z[i] = x[i] - y[i];
}

MG_TARGET_AVX2
void scale(double alpha, const double* x, double* z, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        _mm256_storeu_pd(z + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) z[i] = alpha * x[i];
}

MG_TARGET_AVX2
double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double r = hsum256(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

MG_TARGET_AVX2
double sumsq(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double r = hsum256(acc);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

#undef MG_TARGET_AVX2

#endif // MEAGRAPH_X86

} // namespace meagraph::kernels::detail::avx2
