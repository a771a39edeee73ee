#pragma once

#include <cstddef>
#include <string>

// Data-parallel kernels behind the training math. Every primitive has a
// scalar reference implementation and, on x86-64, an AVX2 variant; the
// active set is picked once at startup (overridable for tests and via the
// DRIFTLAB_KERNELS environment variable: auto|scalar|avx2).
namespace driftlab::kernels {

enum class Backend { Scalar, Avx2 };

// Table of primitive entry points. The gemm_* helpers below always route
// through the active table.
struct Ops {
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*scale)(double alpha, double* x, std::size_t n);
    void (*add)(const double* x, double* y, std::size_t n);   // y += x
    void (*mul)(const double* x, double* y, std::size_t n);   // y *= x
    double (*sum)(const double* x, std::size_t n);
    double (*max_value)(const double* x, std::size_t n);
};

bool avx2_available();
Backend active_backend();
void set_backend(Backend backend);   // throws ConfigError if unsupported
std::string backend_name(Backend backend);

const Ops& ops();

inline double dot(const double* a, const double* b, std::size_t n) { return ops().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { ops().axpy(alpha, x, y, n); }
inline void scale(double alpha, double* x, std::size_t n) { ops().scale(alpha, x, n); }
inline void add(const double* x, double* y, std::size_t n) { ops().add(x, y, n); }
inline void mul(const double* x, double* y, std::size_t n) { ops().mul(x, y, n); }
inline double sum(const double* x, std::size_t n) { return ops().sum(x, n); }
inline double max_value(const double* x, std::size_t n) { return ops().max_value(x, n); }

// Row-major matrix products, written over the primitives above.
// C [r x c] += A [r x inner] * B [inner x c]
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t r, std::size_t inner, std::size_t cols, bool accumulate);
// C [r x c] += A [r x inner] * B^T, with B stored [c x inner]
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t r, std::size_t inner, std::size_t cols, bool accumulate);
// C [r x c] += A^T * B, with A stored [inner x r], B stored [inner x c]
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t r, std::size_t inner, std::size_t cols, bool accumulate);

namespace detail {
extern const Ops scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
extern const Ops avx2_ops;
#endif
}  // namespace detail

}  // namespace driftlab::kernels
