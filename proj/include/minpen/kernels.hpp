#pragma once

#include "minpen/common.hpp"

namespace minpen {

/// Fixed design points, one row per observation.
struct PointSet {
    Matrix pts;  // n x d

    explicit PointSet(Matrix p);
    int n() const { return static_cast<int>(pts.rows()); }
    int d() const { return static_cast<int>(pts.cols()); }
};

enum class KernelKind { ExponentialProduct, Linear, Precomputed };

/// Which positive semi-definite kernel to use. The exponential-product kernel
/// k(x,y) = prod_i exp(-|x_i - y_i|) needs no parameters; a precomputed kernel
/// carries its full n x n matrix.
class KernelSpec {
public:
    static KernelSpec exponential_product();
    static KernelSpec linear();

    /// Accepts a symmetric matrix; asymmetry up to 1e-8 (relative to the largest
    /// entry) is repaired as (K + K^T)/2, anything larger is rejected.
    static KernelSpec precomputed(Matrix k);

    static KernelSpec from_name(std::string_view name);

    KernelKind kind() const { return kind_; }
    const Matrix& matrix() const { return matrix_; }
    std::string name() const;

private:
    KernelSpec(KernelKind k, Matrix m) : kind_(k), matrix_(std::move(m)) {}
    KernelKind kind_;
    Matrix matrix_;  // only for Precomputed
};

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& y);

/// Assemble K_{ab} = k(x_a, x_b). Each unordered pair is evaluated once, so the
/// result is exactly symmetric. Throws on non-finite entries.
Matrix build_kernel_matrix(const KernelSpec& spec, const PointSet& pts);

/// Orthonormal eigenbasis with eigenvalues sorted descending and round-off
/// negatives clipped to zero (keeps every downstream smoother spectrum in [0,1]).
struct Eigensystem {
    Vector eigenvalues;   // descending, all >= 0
    Matrix eigenvectors;  // columns, same order as eigenvalues
    int clip_count = 0;   // how many negative eigenvalues were clipped

    int n() const { return static_cast<int>(eigenvalues.size()); }
};

/// Dense symmetric eigendecomposition (LAPACK dsyevd when available, Eigen
/// otherwise). Throws numeric_error with condition diagnostics on failure.
Eigensystem eigendecompose(const Matrix& k);

}  // namespace minpen
