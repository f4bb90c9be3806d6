// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.
#include <immintrin.h>

#include "tepinn/kernels/kernels.hpp"

namespace tepinn::kernels {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

// crow[0..n) += alpha * brow[0..n)
inline void row_axpy(double alpha, const double* brow, double* crow, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
        _mm256_storeu_pd(crow + j + 4,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j + 4), _mm256_loadu_pd(crow + j + 4)));
    }
    for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
    }
    for (; j < n; ++j) crow[j] += alpha * brow[j];
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        std::size_t j = 0;
        // 16-column register block held across the whole k loop
        for (; j + 16 <= n; j += 16) {
            __m256d c0, c1, c2, c3;
            if (accumulate) {
                c0 = _mm256_loadu_pd(crow + j);
                c1 = _mm256_loadu_pd(crow + j + 4);
                c2 = _mm256_loadu_pd(crow + j + 8);
                c3 = _mm256_loadu_pd(crow + j + 12);
            } else {
                c0 = c1 = c2 = c3 = _mm256_setzero_pd();
            }
            for (std::size_t p = 0; p < k; ++p) {
                const __m256d va = _mm256_set1_pd(arow[p]);
                const double* brow = b + p * n + j;
                c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow), c0);
                c1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 4), c1);
                c2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 8), c2);
                c3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 12), c3);
            }
            _mm256_storeu_pd(crow + j, c0);
            _mm256_storeu_pd(crow + j + 4, c1);
            _mm256_storeu_pd(crow + j + 8, c2);
            _mm256_storeu_pd(crow + j + 12, c3);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d c0 = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p) {
                c0 = _mm256_fmadd_pd(_mm256_set1_pd(arow[p]), _mm256_loadu_pd(b + p * n + j), c0);
            }
            _mm256_storeu_pd(crow + j, c0);
        }
        for (; j < n; ++j) {
            double s = accumulate ? crow[j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
            crow[j] = s;
        }
    }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = dot(arow, b + j * k, k);
            c[i * n + j] = accumulate ? c[i * n + j] + s : s;
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
    if (!accumulate) {
        for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) row_axpy(arow[i], brow, c + i * n, n);
    }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) { row_axpy(alpha, x, y, n); }

void hadamard(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void hadamard_acc(const double* x, const double* z, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += x[i] * z[i];
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{gemm_nn, gemm_nt, gemm_tn, dot, axpy, hadamard, hadamard_acc};
    return table;
}

}  // namespace tepinn::kernels
