#pragma once

#include <cstddef>
#include <string_view>

namespace minpen::simd {

/// One-pass trace statistics of a ridge smoother in its kernel eigenbasis.
/// With s_j = mu_j / (mu_j + nlam):
///   df            = sum s_j          (trace of the smoother)
///   tr_ata        = sum s_j^2        (trace of its square)
///   minpen_factor = sum s_j (2-s_j)  (2 tr - tr of square)
/// Terms with mu_j + nlam == 0 contribute 0 (limit convention for singular K at lambda = 0).
struct RidgeTraces {
    double df;
    double tr_ata;
    double minpen_factor;
};

struct MinResult {
    double value;
    std::size_t index;  // first index attaining the minimum
};

/// Kernel table. `scalar` is the reference implementation; vector backends must
/// match it within round-off (reductions) or bit-exactly (elementwise min_affine).
struct Ops {
    const char* name;

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum_sq)(const double* a, std::size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);

    RidgeTraces (*ridge_traces)(const double* mu, std::size_t n, double nlam);

    // sum over j of ((1 - s_j) v_j)^2; equals ||(I - A_lam) v||^2 in the eigenbasis
    double (*shrink_residual_sq)(const double* mu, const double* v, std::size_t n, double nlam);

    // out_j = s_j v_j; applying the smoother to eigenbasis coefficients
    void (*shrink_apply)(const double* mu, const double* v, std::size_t n, double nlam,
                         double* out);

    // min over i of base[i] + c * slope[i]; evaluated as mul-then-add in every
    // backend so scalar and vector paths agree bitwise
    MinResult (*min_affine)(const double* base, const double* slope, std::size_t n, double c);
};

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif

bool avx2_supported();

/// Backend chosen at first use: AVX2+FMA when the CPU has them, scalar otherwise.
const Ops& active();

/// Override for tests and benchmarking: "auto", "scalar" or "avx2".
void set_backend(std::string_view name);

}  // namespace minpen::simd
