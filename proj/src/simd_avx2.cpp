// AVX2/FMA variants of the arithmetic kernels. This translation unit is the only
// one compiled with -mavx2 -mfma; entry happens solely through the dispatch table,
// after a runtime CPU check.

#if defined(__x86_64__) || defined(_M_X64)

#include "minpen/simd.hpp"

#include <immintrin.h>

#include <limits>

namespace minpen::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s2 = _mm_add_pd(lo, hi);
    const __m128d s1 = _mm_add_sd(s2, _mm_unpackhi_pd(s2, s2));
    return _mm_cvtsd_f64(s1);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum(acc) + tail;
}

double sum_sq_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * a[i];
    return hsum(acc) + tail;
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        tail += d * d;
    }
    return hsum(acc) + tail;
}

// s = mu / (mu + nlam), masked to 0 where the denominator is 0
inline __m256d shrink4(__m256d mu, __m256d nlam) {
    const __m256d denom = _mm256_add_pd(mu, nlam);
    const __m256d mask = _mm256_cmp_pd(denom, _mm256_setzero_pd(), _CMP_GT_OQ);
    return _mm256_and_pd(_mm256_div_pd(mu, denom), mask);
}

inline double shrink1(double mu, double nlam) {
    const double denom = mu + nlam;
    return denom > 0.0 ? mu / denom : 0.0;
}

RidgeTraces ridge_traces_avx2(const double* mu, std::size_t n, double nlam) {
    const __m256d vl = _mm256_set1_pd(nlam);
    const __m256d two = _mm256_set1_pd(2.0);
    __m256d df = _mm256_setzero_pd(), trata = _mm256_setzero_pd(), minpen = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d s = shrink4(_mm256_loadu_pd(mu + i), vl);
        df = _mm256_add_pd(df, s);
        trata = _mm256_fmadd_pd(s, s, trata);
        minpen = _mm256_fmadd_pd(s, _mm256_sub_pd(two, s), minpen);
    }
    RidgeTraces out{hsum(df), hsum(trata), hsum(minpen)};
    for (; i < n; ++i) {
        const double s = shrink1(mu[i], nlam);
        out.df += s;
        out.tr_ata += s * s;
        out.minpen_factor += s * (2.0 - s);
    }
    return out;
}

double shrink_residual_sq_avx2(const double* mu, const double* v, std::size_t n, double nlam) {
    const __m256d vl = _mm256_set1_pd(nlam);
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d s = shrink4(_mm256_loadu_pd(mu + i), vl);
        const __m256d r = _mm256_mul_pd(_mm256_sub_pd(one, s), _mm256_loadu_pd(v + i));
        acc = _mm256_fmadd_pd(r, r, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double r = (1.0 - shrink1(mu[i], nlam)) * v[i];
        tail += r * r;
    }
    return hsum(acc) + tail;
}

void shrink_apply_avx2(const double* mu, const double* v, std::size_t n, double nlam,
                       double* out) {
    const __m256d vl = _mm256_set1_pd(nlam);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d s = shrink4(_mm256_loadu_pd(mu + i), vl);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(s, _mm256_loadu_pd(v + i)));
    }
    for (; i < n; ++i) out[i] = shrink1(mu[i], nlam) * v[i];
}

// Deliberately mul-then-add (no FMA): keeps per-element totals bit-identical to
// the scalar backend so argmin decisions never depend on the dispatch choice.
MinResult min_affine_avx2(const double* base, const double* slope, std::size_t n, double c) {
    const __m256d vc = _mm256_set1_pd(c);
    __m256d vmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d vidx = _mm256_setzero_pd();
    const __m256d lane0 = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t =
            _mm256_add_pd(_mm256_loadu_pd(base + i), _mm256_mul_pd(vc, _mm256_loadu_pd(slope + i)));
        const __m256d lt = _mm256_cmp_pd(t, vmin, _CMP_LT_OQ);
        vmin = _mm256_blendv_pd(vmin, t, lt);
        const __m256d idx = _mm256_add_pd(lane0, _mm256_set1_pd(static_cast<double>(i)));
        vidx = _mm256_blendv_pd(vidx, idx, lt);
    }
    double vals[4], idxs[4];
    _mm256_storeu_pd(vals, vmin);
    _mm256_storeu_pd(idxs, vidx);
    MinResult best{std::numeric_limits<double>::infinity(), 0};
    bool found = false;
    for (int lane = 0; lane < 4; ++lane) {
        if (vals[lane] < best.value ||
            (found && vals[lane] == best.value &&
             static_cast<std::size_t>(idxs[lane]) < best.index)) {
            best = {vals[lane], static_cast<std::size_t>(idxs[lane])};
            found = true;
        }
    }
    for (; i < n; ++i) {
        const double t = base[i] + c * slope[i];
        if (t < best.value) best = {t, i};
    }
    return best;
}

}  // namespace

const Ops& avx2_ops() {
    static const Ops ops{
        "avx2",          dot_avx2,          sum_sq_avx2,       sum_sq_diff_avx2,
        ridge_traces_avx2, shrink_residual_sq_avx2, shrink_apply_avx2, min_affine_avx2,
    };
    return ops;
}

}  // namespace minpen::simd

#endif  // x86_64
