#include "minpen/simd.hpp"

#include <limits>

namespace minpen::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_sq_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

inline double shrink_factor(double mu, double nlam) {
    const double denom = mu + nlam;
    return denom > 0.0 ? mu / denom : 0.0;
}

RidgeTraces ridge_traces_scalar(const double* mu, std::size_t n, double nlam) {
    double df = 0.0, trata = 0.0, minpen = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = shrink_factor(mu[i], nlam);
        df += s;
        trata += s * s;
        minpen += s * (2.0 - s);
    }
    return {df, trata, minpen};
}

double shrink_residual_sq_scalar(const double* mu, const double* v, std::size_t n, double nlam) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (1.0 - shrink_factor(mu[i], nlam)) * v[i];
        acc += r * r;
    }
    return acc;
}

void shrink_apply_scalar(const double* mu, const double* v, std::size_t n, double nlam,
                         double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = shrink_factor(mu[i], nlam) * v[i];
}

MinResult min_affine_scalar(const double* base, const double* slope, std::size_t n, double c) {
    MinResult best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < n; ++i) {
        const double v = base[i] + c * slope[i];
        if (v < best.value) best = {v, i};
    }
    return best;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{
        "scalar",         dot_scalar,          sum_sq_scalar,       sum_sq_diff_scalar,
        ridge_traces_scalar, shrink_residual_sq_scalar, shrink_apply_scalar, min_affine_scalar,
    };
    return ops;
}

}  // namespace minpen::simd
