#pragma once

#include "minpen/kernels.hpp"

#include <memory>
#include <optional>
#include <string>

namespace minpen {

/// Trace statistics of one symmetric smoother A with spectrum in [0,1]:
/// df = tr(A), tr_ata = tr(A^T A), minpen_factor = 2 tr(A) - tr(A^T A).
/// Always 0 <= tr_ata <= df <= minpen_factor <= 2 df.
struct SmootherStats {
    double df = 0.0;
    double tr_ata = 0.0;
    double minpen_factor = 0.0;
};

/// Statistics of the ridge smoother K (K + n lambda I)^{-1} from the eigenvalues
/// of K. Terms with mu_j = 0 at lambda = 0 contribute 0 (limit convention).
SmootherStats ridge_stats(const Eigensystem& eig, double lambda, int n);

/// Fitted values of the ridge smoother, Q diag(mu/(mu + n lambda)) Q^T Y.
Vector ridge_fit(const Eigensystem& eig, double lambda, const Vector& y);

/// Projection onto the span of an orthonormal basis (columns of `basis`).
/// df = tr_ata = k. Rejects bases that are not orthonormal within 1e-8.
std::pair<SmootherStats, Vector> projection_smoother(const Matrix& basis, const Vector& y);

/// Nonnegative combination sum_j eta_j K_j feeding the ridge machinery.
Matrix mkl_effective_kernel(const std::vector<Matrix>& kernels, const Vector& eta);

/// Default geometric grid of lambda values: size max(n,100), n*lambda spanning
/// [max(mu_n, mu_1 * 1e-12)/10, 10 mu_1]. The low end puts members at df close
/// to n, the high end at df well below sqrt(n).
std::vector<double> default_lambda_grid(const Eigensystem& eig, int n, std::size_t size = 0);

/// Which penalty multiplies C in the multiple-kernel criterion: the minimal
/// penalty factor 2 tr - tr of square, or tr alone (half the ideal penalty,
/// used for the no-jump comparison curve).
enum class MklPenalty { MinimalFactor, DfOnly };

/// Value (and pieces) of the penalized multiple-kernel criterion
/// ||(I - A_{eta,lambda}) Y||^2 + C * penalty(A_{eta,lambda}).
struct MklCriterion {
    double risk_ss;
    SmootherStats stats;
    double total;
};
MklCriterion mkl_criterion(const std::vector<Matrix>& kernels, const Vector& eta, double lambda,
                           const Vector& y, double c,
                           MklPenalty penalty = MklPenalty::MinimalFactor);

/// Analytic gradient of the criterion above with respect to eta
/// (d A / d eta_j = n lambda (G + n lambda I)^{-1} K_j (G + n lambda I)^{-1}).
Vector mkl_criterion_gradient(const std::vector<Matrix>& kernels, const Vector& eta,
                              double lambda, const Vector& y, double c,
                              MklPenalty penalty = MklPenalty::MinimalFactor);

/// One projected-gradient step on the criterion: eta' = max(0, eta - step * grad),
/// halving `step` until the criterion does not increase (at most 30 halvings; if
/// all fail, returns eta unchanged). `step` is updated to the size actually used.
Vector mkl_gradient_step(const std::vector<Matrix>& kernels, const Vector& eta, double lambda,
                         const Vector& y, double c, double& step,
                         MklPenalty penalty = MklPenalty::MinimalFactor);

/// Projected gradient descent to (local) stationarity. Stops on a small
/// projected gradient, a rejected line search, or once an iteration improves
/// the criterion by less than rel_decrease_tol relative (loosen the latter for
/// path sweeps where warm starts land near the optimum anyway).
Vector mkl_gradient_descent(const std::vector<Matrix>& kernels, const Vector& eta0,
                            double lambda, const Vector& y, double c, int max_iters = 200,
                            double grad_tol = 1e-10,
                            MklPenalty penalty = MklPenalty::MinimalFactor,
                            double rel_decrease_tol = 1e-13);

/// A finite indexed family {A_lambda} of symmetric smoothers: a ridge path, a set
/// of projections, or a multiple-kernel (eta, lambda) grid. Immutable after
/// construction; per-member statistics are memoized behind a lock.
class SmootherFamily {
public:
    enum class Kind { RidgePath, ProjectionSet, MklGrid };

    // ridge path over the given lambdas (sorted ascending, i.e. decreasing df)
    static SmootherFamily ridge_path(Eigensystem eig, std::vector<double> lambdas, int n);
    static SmootherFamily projection_set(std::vector<Matrix> bases);
    // members are ordered eta-block by eta-block, lambdas ascending within a block
    static SmootherFamily mkl_grid(std::vector<Matrix> kernels, std::vector<Vector> etas,
                                   std::vector<double> lambdas);

    Kind kind() const { return kind_; }
    std::size_t size() const;
    int n() const { return n_; }

    const SmootherStats& stats(std::size_t id) const;
    double df(std::size_t id) const { return stats(id).df; }
    Vector fit(std::size_t id, const Vector& y) const;
    std::string member_label(std::size_t id) const;

    // ridge & mkl members only
    double lambda_of(std::size_t id) const;
    // mkl members only
    const Vector& eta_of(std::size_t id) const;
    std::size_t eta_index_of(std::size_t id) const;

    const Eigensystem& ridge_eigensystem() const;
    const std::vector<double>& lambda_grid() const { return lambdas_; }
    const std::vector<Matrix>& mkl_kernels() const { return kernels_; }
    const std::vector<Vector>& mkl_etas() const { return etas_; }
    const std::vector<Matrix>& projection_bases() const { return bases_; }

    const Eigensystem& block_eigensystem(std::size_t eta_index) const;

private:
    SmootherFamily() = default;

    Kind kind_ = Kind::RidgePath;
    int n_ = 0;
    std::optional<Eigensystem> eig_;    // ridge
    std::vector<double> lambdas_;       // ridge & mkl
    std::vector<Matrix> bases_;         // projections
    std::vector<Matrix> kernels_;       // mkl
    std::vector<Vector> etas_;          // mkl

    mutable std::unique_ptr<std::mutex> cache_mutex_ = std::make_unique<std::mutex>();
    mutable std::vector<std::optional<SmootherStats>> stats_cache_;
    mutable std::vector<std::optional<Eigensystem>> block_eigs_;  // mkl, per eta
};

/// Per-member arrays for one response vector, laid out for the path scans:
/// statistics plus the empirical risk ||A_lambda Y - Y||^2.
struct FamilyProfile {
    std::vector<double> df;
    std::vector<double> tr_ata;
    std::vector<double> minpen_factor;
    std::vector<double> risk_ss;

    std::size_t size() const { return df.size(); }
};

FamilyProfile profile_family(const SmootherFamily& family, const Vector& y, int threads = 1);

/// Per-member true risk n^{-1} ||A_lambda Y - F||^2 (simulation use; F known).
std::vector<double> true_risk_profile(const SmootherFamily& family, const Vector& f,
                                      const Vector& y, int threads = 1);

}  // namespace minpen
