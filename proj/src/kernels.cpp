#include "minpen/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#ifdef MINPEN_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace minpen {

PointSet::PointSet(Matrix p) : pts(std::move(p)) {
    if (pts.rows() < 1 || pts.cols() < 1)
        throw input_error("point set must have at least one row and one column");
    if (!pts.allFinite()) throw input_error("point set contains non-finite coordinates");
}

KernelSpec KernelSpec::exponential_product() {
    return KernelSpec(KernelKind::ExponentialProduct, Matrix());
}

KernelSpec KernelSpec::linear() { return KernelSpec(KernelKind::Linear, Matrix()); }

KernelSpec KernelSpec::precomputed(Matrix k) {
    if (k.rows() != k.cols() || k.rows() < 1)
        throw input_error("precomputed kernel must be a nonempty square matrix");
    if (!k.allFinite()) throw input_error("precomputed kernel contains non-finite entries");
    const double scale = std::max(1e-300, k.cwiseAbs().maxCoeff());
    const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale) {
        std::ostringstream msg;
        msg << "precomputed kernel is asymmetric: max |K - K^T| = " << asym
            << " exceeds 1e-8 * max|K| = " << 1e-8 * scale;
        throw input_error(msg.str());
    }
    if (asym > 0.0) k = ((k + k.transpose()) * 0.5).eval();
    return KernelSpec(KernelKind::Precomputed, std::move(k));
}

KernelSpec KernelSpec::from_name(std::string_view name) {
    if (name == "exponential-product") return exponential_product();
    if (name == "linear") return linear();
    throw input_error("unknown kernel '" + std::string(name) +
                      "' (expected exponential-product|linear)");
}

std::string KernelSpec::name() const {
    switch (kind_) {
        case KernelKind::ExponentialProduct: return "exponential-product";
        case KernelKind::Linear: return "linear";
        case KernelKind::Precomputed: return "precomputed";
    }
    return "?";
}

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& y) {
    if (x.size() != y.size()) throw input_error("kernel_value: point dimensions differ");
    switch (spec.kind()) {
        case KernelKind::ExponentialProduct:
            return std::exp(-(x - y).cwiseAbs().sum());
        case KernelKind::Linear:
            return x.dot(y);
        case KernelKind::Precomputed:
            throw input_error("kernel_value: a precomputed kernel has no pointwise form");
    }
    return 0.0;
}

Matrix build_kernel_matrix(const KernelSpec& spec, const PointSet& pts) {
    const int n = pts.n();
    if (spec.kind() == KernelKind::Precomputed) {
        if (spec.matrix().rows() != n)
            throw input_error("precomputed kernel size does not match point count");
        return spec.matrix();
    }
    Matrix k(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b <= a; ++b) {
            const double v = kernel_value(spec, pts.pts.row(a).transpose(),
                                          pts.pts.row(b).transpose());
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "kernel matrix entry (" << a << "," << b << ") is non-finite";
                throw input_error(msg.str());
            }
            k(a, b) = v;
            k(b, a) = v;
        }
    }
    return k;
}

namespace {

#ifdef MINPEN_HAVE_LAPACKE
// OpenBLAS may spawn threads based on the environment; pin it to one so results
// never depend on a threading knob outside this library's control.
void pin_blas_threads() {
    static std::once_flag flag;
    std::call_once(flag, [] { setenv("OPENBLAS_NUM_THREADS", "1", /*overwrite=*/0); });
}
#endif

std::string condition_diagnostics(const Matrix& k) {
    std::ostringstream msg;
    msg << "n=" << k.rows() << " max|K|=" << k.cwiseAbs().maxCoeff()
        << " trace=" << k.trace();
    return msg.str();
}

}  // namespace

Eigensystem eigendecompose(const Matrix& k) {
    if (k.rows() != k.cols() || k.rows() < 1)
        throw input_error("eigendecompose: matrix must be square and nonempty");
    const int n = static_cast<int>(k.rows());

    Vector values(n);
    Matrix vectors;

#ifdef MINPEN_HAVE_LAPACKE
    pin_blas_threads();
    vectors = k;  // dsyevd overwrites with eigenvectors
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, vectors.data(), n,
                                    values.data());
    if (info != 0) {
        throw numeric_error("eigendecomposition failed (dsyevd info=" + std::to_string(info) +
                            "; " + condition_diagnostics(k) + ")");
    }
#else
    Eigen::SelfAdjointEigenSolver<Matrix> solver(k);
    if (solver.info() != Eigen::Success)
        throw numeric_error("eigendecomposition did not converge (" +
                            condition_diagnostics(k) + ")");
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
#endif

    // ascending from the solver; flip to descending
    Eigensystem eig;
    eig.eigenvalues = values.reverse();
    eig.eigenvectors = vectors.rowwise().reverse();
    for (int j = 0; j < n; ++j) {
        if (eig.eigenvalues(j) < 0.0) {
            eig.eigenvalues(j) = 0.0;
            ++eig.clip_count;
        }
    }
    return eig;
}

}  // namespace minpen
