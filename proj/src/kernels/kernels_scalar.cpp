#include "driftlab/kernels.hpp"

namespace driftlab::kernels::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void mul_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double max_scalar(const double* x, std::size_t n) {
    double best = x[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (x[i] > best) best = x[i];
    }
    return best;
}

}  // namespace

const Ops scalar_ops = {
    dot_scalar, axpy_scalar, scale_scalar, add_scalar, mul_scalar, sum_scalar, max_scalar,
};

}  // namespace driftlab::kernels::detail
