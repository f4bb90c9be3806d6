#include <atomic>
#include <cstdlib>
#include <string>

#include "tepinn/error.hpp"
#include "tepinn/kernels/kernels.hpp"

namespace tepinn::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(TEPINN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect() {
    if (const char* env = std::getenv("TEPINN_KERNELS")) {
        const std::string v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && supported(Backend::Avx2)) return Backend::Avx2;
        if (v == "neon" && supported(Backend::Neon)) return Backend::Neon;
    }
    if (supported(Backend::Avx2)) return Backend::Avx2;
    if (supported(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

struct State {
    std::atomic<Backend> backend{detect()};
};

State& state() {
    static State s;
    return s;
}

}  // namespace

bool supported(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return true;
        case Backend::Avx2: {
            static const bool ok = cpu_has_avx2();
            return ok;
        }
        case Backend::Neon:
#if defined(TEPINN_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table(Backend backend) {
    if (!supported(backend)) {
        throw Error(ErrorKind::InvalidArgument, "kernel backend " + std::string(name(backend)) + " unavailable");
    }
    switch (backend) {
#if defined(TEPINN_HAVE_AVX2)
        case Backend::Avx2: return avx2_table();
#endif
#if defined(TEPINN_HAVE_NEON)
        case Backend::Neon: return neon_table();
#endif
        default: return scalar_table();
    }
}

const KernelTable& active() { return table(state().backend.load(std::memory_order_relaxed)); }

Backend active_backend() { return state().backend.load(std::memory_order_relaxed); }

void select(Backend backend) {
    table(backend);
    state().backend.store(backend, std::memory_order_relaxed);
}

std::string_view name(Backend backend) {
    switch (backend) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "unknown";
}

}  // namespace tepinn::kernels
