#pragma once

// Dense double-precision inner loops used by the autodiff tensors.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled when available and
// selected at runtime from CPU feature detection. Setting the environment
// variable TEPINN_KERNELS=scalar forces the reference path.
//
// Matrix arguments are row-major. `accumulate` adds into `c` instead of
// overwriting it.

#include <cstddef>
#include <string_view>

namespace tepinn::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
    // c[m×n] (+)= a[m×k] · b[k×n]
    void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate);
    // c[m×n] (+)= a[m×k] · b[n×k]ᵀ
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate);
    // c[m×n] (+)= a[k×m]ᵀ · b[k×n]
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate);
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += alpha · x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out = x ⊙ y
    void (*hadamard)(const double* x, const double* y, double* out, std::size_t n);
    // y += x ⊙ z
    void (*hadamard_acc)(const double* x, const double* z, double* y, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(TEPINN_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(TEPINN_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// True if the backend was compiled in and the running CPU supports it.
bool supported(Backend backend);

/// Table for a specific backend. Throws InvalidArgument if unsupported.
const KernelTable& table(Backend backend);

/// Currently selected table (initialized on first use).
const KernelTable& active();
Backend active_backend();

/// Switches the process-wide backend. Not thread-safe with concurrent kernel calls.
void select(Backend backend);

std::string_view name(Backend backend);

}  // namespace tepinn::kernels
