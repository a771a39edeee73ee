#include "driftlab/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "driftlab/errors.hpp"

namespace driftlab::kernels {

namespace {

Backend g_backend = Backend::Scalar;

Backend detect_backend() {
    const char* env = std::getenv("DRIFTLAB_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!avx2_available()) throw ConfigError("DRIFTLAB_KERNELS=avx2 but CPU lacks AVX2");
            return Backend::Avx2;
        }
        // anything else, including "auto", falls through to detection
    }
    return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

const bool g_initialized = [] {
    g_backend = detect_backend();
    return true;
}();

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() {
    (void)g_initialized;
    return g_backend;
}

void set_backend(Backend backend) {
    if (backend == Backend::Avx2 && !avx2_available()) {
        throw ConfigError("AVX2 backend requested but not available on this CPU");
    }
    g_backend = backend;
}

std::string backend_name(Backend backend) {
    return backend == Backend::Avx2 ? "avx2" : "scalar";
}

const Ops& ops() {
#if defined(__x86_64__) || defined(_M_X64)
    if (active_backend() == Backend::Avx2) return detail::avx2_ops;
#endif
    return detail::scalar_ops;
}

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t r, std::size_t inner, std::size_t cols, bool accumulate) {
    const Ops& k = ops();
    for (std::size_t i = 0; i < r; ++i) {
        double* crow = c + i * cols;
        if (!accumulate) std::memset(crow, 0, cols * sizeof(double));
        const double* arow = a + i * inner;
        for (std::size_t p = 0; p < inner; ++p) {
            if (arow[p] != 0.0) k.axpy(arow[p], b + p * cols, crow, cols);
        }
    }
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t r, std::size_t inner, std::size_t cols, bool accumulate) {
    const Ops& k = ops();
    for (std::size_t i = 0; i < r; ++i) {
        const double* arow = a + i * inner;
        double* crow = c + i * cols;
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = k.dot(arow, b + j * inner, inner);
            crow[j] = accumulate ? crow[j] + v : v;
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t r, std::size_t inner, std::size_t cols, bool accumulate) {
    const Ops& k = ops();
    if (!accumulate) std::memset(c, 0, r * cols * sizeof(double));
    for (std::size_t p = 0; p < inner; ++p) {
        const double* arow = a + p * r;
        const double* brow = b + p * cols;
        for (std::size_t i = 0; i < r; ++i) {
            if (arow[i] != 0.0) k.axpy(arow[i], brow, c + i * cols, cols);
        }
    }
}

}  // namespace driftlab::kernels
