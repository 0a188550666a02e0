#include "minpen/smoothers.hpp"

#include "minpen/simd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace minpen {

SmootherStats ridge_stats(const Eigensystem& eig, double lambda, int n) {
    if (lambda < 0.0) throw input_error("ridge_stats: lambda must be nonnegative");
    const auto t = simd::active().ridge_traces(eig.eigenvalues.data(),
                                               static_cast<std::size_t>(eig.n()),
                                               static_cast<double>(n) * lambda);
    return {t.df, t.tr_ata, t.minpen_factor};
}

Vector ridge_fit(const Eigensystem& eig, double lambda, const Vector& y) {
    if (lambda < 0.0) throw input_error("ridge_fit: lambda must be nonnegative");
    const int n = eig.n();
    if (y.size() != n) throw input_error("ridge_fit: response length does not match");
    const Vector z = eig.eigenvectors.transpose() * y;
    Vector shrunk(n);
    simd::active().shrink_apply(eig.eigenvalues.data(), z.data(), static_cast<std::size_t>(n),
                                static_cast<double>(n) * lambda, shrunk.data());
    return eig.eigenvectors * shrunk;
}

std::pair<SmootherStats, Vector> projection_smoother(const Matrix& basis, const Vector& y) {
    const auto n = basis.rows();
    const auto k = basis.cols();
    if (y.size() != n) throw input_error("projection_smoother: response length does not match");
    if (k > 0) {
        const Matrix gram = basis.transpose() * basis;
        const double err = (gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
        if (err > 1e-8) {
            std::ostringstream msg;
            msg << "projection basis is not orthonormal: max |B^T B - I| = " << err;
            throw input_error(msg.str());
        }
    }
    SmootherStats stats{static_cast<double>(k), static_cast<double>(k),
                        static_cast<double>(k)};
    Vector fitted = k > 0 ? Vector(basis * (basis.transpose() * y)) : Vector(Vector::Zero(n));
    return {stats, std::move(fitted)};
}

Matrix mkl_effective_kernel(const std::vector<Matrix>& kernels, const Vector& eta) {
    if (kernels.empty()) throw input_error("mkl_effective_kernel: no kernels given");
    if (eta.size() != static_cast<Eigen::Index>(kernels.size()))
        throw input_error("mkl_effective_kernel: eta length does not match kernel count");
    if ((eta.array() < 0.0).any())
        throw input_error("mkl_effective_kernel: eta must be nonnegative");
    if (eta.maxCoeff() <= 0.0)
        throw input_error("mkl_effective_kernel: eta must have a positive entry");
    const auto n = kernels.front().rows();
    Matrix g = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < kernels.size(); ++j) {
        if (kernels[j].rows() != n || kernels[j].cols() != n)
            throw input_error("mkl_effective_kernel: kernel sizes differ");
        if (eta(static_cast<Eigen::Index>(j)) != 0.0)
            g += eta(static_cast<Eigen::Index>(j)) * kernels[j];
    }
    return g;
}

std::vector<double> default_lambda_grid(const Eigensystem& eig, int n, std::size_t size) {
    const double mu_max = eig.eigenvalues(0);
    if (!(mu_max > 0.0))
        throw input_error("default_lambda_grid: kernel matrix has an all-zero spectrum");
    const double mu_min = eig.eigenvalues(eig.n() - 1);
    if (size == 0) size = static_cast<std::size_t>(std::max(n, 100));
    if (size < 2) throw input_error("default_lambda_grid: need at least 2 grid points");
    const double lo = std::max(mu_min, mu_max * 1e-12) / 10.0;
    const double hi = 10.0 * mu_max;
    const double ratio = std::pow(hi / lo, 1.0 / static_cast<double>(size - 1));
    std::vector<double> lambdas(size);
    for (std::size_t i = 0; i < size; ++i)
        lambdas[i] = lo * std::pow(ratio, static_cast<double>(i)) / static_cast<double>(n);
    return lambdas;
}

// ---------------------------------------------------------------------------
// multiple kernel criterion and its eta-gradient

namespace {

struct MklEigenParts {
    Eigensystem eig;  // of G = sum eta_j K_j
    Vector z;         // Q^T y
};

MklEigenParts mkl_parts(const std::vector<Matrix>& kernels, const Vector& eta,
                        const Vector& y) {
    const auto n = kernels.front().rows();
    Matrix g = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < kernels.size(); ++j)
        if (eta(static_cast<Eigen::Index>(j)) != 0.0)
            g += eta(static_cast<Eigen::Index>(j)) * kernels[j];
    MklEigenParts parts{eigendecompose(g), Vector()};
    parts.z = parts.eig.eigenvectors.transpose() * y;
    return parts;
}

MklCriterion criterion_from_parts(const MklEigenParts& parts, double lambda, double c, int n,
                                  MklPenalty penalty) {
    const auto& ops = simd::active();
    const double nlam = static_cast<double>(n) * lambda;
    const auto m = static_cast<std::size_t>(n);
    const auto traces = ops.ridge_traces(parts.eig.eigenvalues.data(), m, nlam);
    const double risk =
        ops.shrink_residual_sq(parts.eig.eigenvalues.data(), parts.z.data(), m, nlam);
    MklCriterion crit;
    crit.risk_ss = risk;
    crit.stats = {traces.df, traces.tr_ata, traces.minpen_factor};
    crit.total =
        risk + c * (penalty == MklPenalty::MinimalFactor ? traces.minpen_factor : traces.df);
    return crit;
}

void check_eta(const std::vector<Matrix>& kernels, const Vector& eta) {
    if (kernels.empty()) throw input_error("mkl: no kernels given");
    if (eta.size() != static_cast<Eigen::Index>(kernels.size()))
        throw input_error("mkl: eta length does not match kernel count");
    if ((eta.array() < 0.0).any()) throw input_error("mkl: eta must be nonnegative");
}

Vector gradient_from_parts(const MklEigenParts& parts, const std::vector<Matrix>& kernels,
                           const Vector& eta, double lambda, const Vector& y, double c,
                           MklPenalty penalty) {
    const int n = static_cast<int>(y.size());
    const double nlam = static_cast<double>(n) * lambda;
    const Vector& d = parts.eig.eigenvalues;
    const Matrix& q = parts.eig.eigenvectors;

    // resolvent-weighted coefficient vectors: a = R r (residual), b = R y,
    // with R = (G + n lambda I)^{-1}
    Vector inv_denom(n), s(n);
    for (int j = 0; j < n; ++j) {
        const double denom = d(j) + nlam;
        inv_denom(j) = denom > 0.0 ? 1.0 / denom : 0.0;
        s(j) = d(j) * inv_denom(j);
    }
    const Vector b_coef = parts.z.cwiseProduct(inv_denom);
    const Vector a_coef = b_coef.cwiseProduct(Vector::Ones(n) - s);
    const Vector a = q * a_coef;
    const Vector b = q * b_coef;

    // penalty weights per eigendirection: d df/d eta_l = n lambda tr(R^2 K_l),
    // d trata/d eta_l = 2 n lambda tr(R A R K_l)
    Vector w(n);
    for (int j = 0; j < n; ++j) {
        const double base = nlam * inv_denom(j) * inv_denom(j);
        w(j) = penalty == MklPenalty::MinimalFactor ? 2.0 * (1.0 - s(j)) * base : base;
    }

    // tr(W K_l) needs one GEMM per kernel, except that sum_l eta_l tr(W K_l)
    // = tr(W G) is free in the eigenbasis; the largest-eta coordinate is
    // derived from that identity, so only p-1 GEMMs remain
    Eigen::Index pivot;
    eta.maxCoeff(&pivot);
    double tr_wg = 0.0;
    for (int j = 0; j < n; ++j) tr_wg += w(j) * d(j);

    Vector grad(eta.size());
    double partial_sum = 0.0;
    for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(kernels.size()); ++l) {
        const auto lu = static_cast<std::size_t>(l);
        const double d_risk = -2.0 * nlam * a.dot(kernels[lu] * b);
        if (l == pivot && eta(pivot) > 0.0) {
            grad(l) = d_risk;  // penalty part filled in below
            continue;
        }
        const Matrix kq = kernels[lu] * q;
        double tr_wk = 0.0;
        for (int j = 0; j < n; ++j) tr_wk += w(j) * q.col(j).dot(kq.col(j));
        partial_sum += eta(l) * tr_wk;
        grad(l) = d_risk + c * tr_wk;
    }
    if (eta(pivot) > 0.0) {
        grad(pivot) += c * (tr_wg - partial_sum) / eta(pivot);
    } else {
        // all-zero eta: G = 0 and every tr(W K_l) needs its own product
        const auto pu = static_cast<std::size_t>(pivot);
        const Matrix kq = kernels[pu] * q;
        double tr_wk = 0.0;
        for (int j = 0; j < n; ++j) tr_wk += w(j) * q.col(j).dot(kq.col(j));
        grad(pivot) += c * tr_wk;
    }
    if (!grad.allFinite()) {
        std::ostringstream msg;
        msg << "mkl gradient is non-finite at eta = [" << eta.transpose() << "]";
        throw numeric_error(msg.str());
    }
    return grad;
}

}  // namespace

MklCriterion mkl_criterion(const std::vector<Matrix>& kernels, const Vector& eta, double lambda,
                           const Vector& y, double c, MklPenalty penalty) {
    check_eta(kernels, eta);
    const auto parts = mkl_parts(kernels, eta, y);
    return criterion_from_parts(parts, lambda, c, static_cast<int>(y.size()), penalty);
}

Vector mkl_criterion_gradient(const std::vector<Matrix>& kernels, const Vector& eta,
                              double lambda, const Vector& y, double c, MklPenalty penalty) {
    check_eta(kernels, eta);
    const auto parts = mkl_parts(kernels, eta, y);
    return gradient_from_parts(parts, kernels, eta, lambda, y, c, penalty);
}

Vector mkl_gradient_step(const std::vector<Matrix>& kernels, const Vector& eta, double lambda,
                         const Vector& y, double c, double& step, MklPenalty penalty) {
    check_eta(kernels, eta);
    const int n = static_cast<int>(y.size());
    const auto parts = mkl_parts(kernels, eta, y);
    const auto current = criterion_from_parts(parts, lambda, c, n, penalty);
    const Vector grad = gradient_from_parts(parts, kernels, eta, lambda, y, c, penalty);
    double trial = step;
    for (int halving = 0; halving <= 30; ++halving) {
        const Vector candidate = (eta - trial * grad).cwiseMax(0.0);
        if (candidate.maxCoeff() > 0.0) {
            const auto crit = mkl_criterion(kernels, candidate, lambda, y, c, penalty);
            if (crit.total <= current.total) {
                step = trial;
                return candidate;
            }
        }
        trial *= 0.5;
    }
    return eta;  // no decrease found: stationary to working precision
}

Vector mkl_gradient_descent(const std::vector<Matrix>& kernels, const Vector& eta0,
                            double lambda, const Vector& y, double c, int max_iters,
                            double grad_tol, MklPenalty penalty, double rel_decrease_tol) {
    check_eta(kernels, eta0);
    const int n = static_cast<int>(y.size());
    Vector eta = eta0;
    auto parts = mkl_parts(kernels, eta, y);
    auto crit = criterion_from_parts(parts, lambda, c, n, penalty);
    Vector grad = gradient_from_parts(parts, kernels, eta, lambda, y, c, penalty);
    double step = 1.0 / (1.0 + grad.norm());
    for (int it = 0; it < max_iters; ++it) {
        // projected gradient: coordinates pinned at 0 cannot move further down
        Vector pg = grad;
        for (Eigen::Index j = 0; j < eta.size(); ++j)
            if (eta(j) <= 0.0 && pg(j) > 0.0) pg(j) = 0.0;
        if (pg.norm() <= grad_tol * (1.0 + std::abs(crit.total))) break;

        // backtracking line search; the accepted candidate's eigensystem is
        // reused for the next gradient
        bool accepted = false;
        Vector candidate;
        MklEigenParts cand_parts;
        MklCriterion cand_crit{};
        double trial = step;
        for (int halving = 0; halving <= 30; ++halving) {
            candidate = (eta - trial * grad).cwiseMax(0.0);
            if (candidate.maxCoeff() > 0.0 &&
                (candidate - eta).cwiseAbs().maxCoeff() > 0.0) {
                cand_parts = mkl_parts(kernels, candidate, y);
                cand_crit = criterion_from_parts(cand_parts, lambda, c, n, penalty);
                if (cand_crit.total <= crit.total) {
                    accepted = true;
                    step = trial;
                    break;
                }
            }
            trial *= 0.5;
        }
        if (!accepted) break;
        const double decrease = crit.total - cand_crit.total;
        eta = candidate;
        parts = std::move(cand_parts);
        crit = cand_crit;
        grad = gradient_from_parts(parts, kernels, eta, lambda, y, c, penalty);
        step *= 2.0;  // let backtracking shrink it again if needed
        if (decrease <= rel_decrease_tol * (1.0 + std::abs(crit.total))) break;
    }
    return eta;
}

// ---------------------------------------------------------------------------
// SmootherFamily

SmootherFamily SmootherFamily::ridge_path(Eigensystem eig, std::vector<double> lambdas, int n) {
    if (lambdas.size() < 2) throw input_error("ridge_path: need at least 2 lambda values");
    if (eig.n() != n) throw input_error("ridge_path: eigensystem size does not match n");
    for (double l : lambdas)
        if (!(l >= 0.0)) throw input_error("ridge_path: lambdas must be nonnegative");
    std::sort(lambdas.begin(), lambdas.end());  // ascending lambda = descending df
    SmootherFamily fam;
    fam.kind_ = Kind::RidgePath;
    fam.n_ = n;
    fam.eig_ = std::move(eig);
    fam.lambdas_ = std::move(lambdas);
    fam.stats_cache_.resize(fam.lambdas_.size());
    return fam;
}

SmootherFamily SmootherFamily::projection_set(std::vector<Matrix> bases) {
    if (bases.size() < 2) throw input_error("projection_set: need at least 2 members");
    const auto n = bases.front().rows();
    for (const auto& b : bases)
        if (b.rows() != n) throw input_error("projection_set: basis row counts differ");
    SmootherFamily fam;
    fam.kind_ = Kind::ProjectionSet;
    fam.n_ = static_cast<int>(n);
    fam.bases_ = std::move(bases);
    fam.stats_cache_.resize(fam.bases_.size());
    return fam;
}

SmootherFamily SmootherFamily::mkl_grid(std::vector<Matrix> kernels, std::vector<Vector> etas,
                                        std::vector<double> lambdas) {
    if (kernels.empty()) throw input_error("mkl_grid: no kernels given");
    if (etas.empty() || lambdas.empty())
        throw input_error("mkl_grid: eta and lambda grids must be nonempty");
    if (etas.size() * lambdas.size() < 2) throw input_error("mkl_grid: need at least 2 members");
    const auto n = kernels.front().rows();
    for (const auto& k : kernels)
        if (k.rows() != n || k.cols() != n) throw input_error("mkl_grid: kernel sizes differ");
    for (const auto& e : etas) {
        if (e.size() != static_cast<Eigen::Index>(kernels.size()))
            throw input_error("mkl_grid: eta length does not match kernel count");
        if ((e.array() < 0.0).any() || e.maxCoeff() <= 0.0)
            throw input_error("mkl_grid: each eta must be nonnegative and nonzero");
    }
    std::sort(lambdas.begin(), lambdas.end());
    SmootherFamily fam;
    fam.kind_ = Kind::MklGrid;
    fam.n_ = static_cast<int>(n);
    fam.kernels_ = std::move(kernels);
    fam.etas_ = std::move(etas);
    fam.lambdas_ = std::move(lambdas);
    fam.stats_cache_.resize(fam.etas_.size() * fam.lambdas_.size());
    fam.block_eigs_.resize(fam.etas_.size());
    return fam;
}

std::size_t SmootherFamily::size() const {
    switch (kind_) {
        case Kind::RidgePath: return lambdas_.size();
        case Kind::ProjectionSet: return bases_.size();
        case Kind::MklGrid: return etas_.size() * lambdas_.size();
    }
    return 0;
}

double SmootherFamily::lambda_of(std::size_t id) const {
    switch (kind_) {
        case Kind::RidgePath: return lambdas_.at(id);
        case Kind::MklGrid: return lambdas_.at(id % lambdas_.size());
        case Kind::ProjectionSet: break;
    }
    throw input_error("lambda_of: projection members have no lambda");
}

std::size_t SmootherFamily::eta_index_of(std::size_t id) const {
    if (kind_ != Kind::MklGrid) throw input_error("eta_index_of: not an mkl family");
    return id / lambdas_.size();
}

const Vector& SmootherFamily::eta_of(std::size_t id) const {
    return etas_.at(eta_index_of(id));
}

const Eigensystem& SmootherFamily::ridge_eigensystem() const {
    if (kind_ != Kind::RidgePath || !eig_)
        throw input_error("ridge_eigensystem: not a ridge family");
    return *eig_;
}

const Eigensystem& SmootherFamily::block_eigensystem(std::size_t eta_index) const {
    if (kind_ != Kind::MklGrid) throw input_error("block_eigensystem: not an mkl family");
    {
        std::lock_guard<std::mutex> lk(*cache_mutex_);
        if (block_eigs_.at(eta_index)) return *block_eigs_[eta_index];
    }
    Eigensystem eig = eigendecompose(mkl_effective_kernel(kernels_, etas_[eta_index]));
    std::lock_guard<std::mutex> lk(*cache_mutex_);
    if (!block_eigs_[eta_index]) block_eigs_[eta_index] = std::move(eig);
    return *block_eigs_[eta_index];
}

const SmootherStats& SmootherFamily::stats(std::size_t id) const {
    {
        std::lock_guard<std::mutex> lk(*cache_mutex_);
        if (stats_cache_.at(id)) return *stats_cache_[id];
    }
    SmootherStats computed;
    switch (kind_) {
        case Kind::RidgePath:
            computed = ridge_stats(*eig_, lambdas_[id], n_);
            break;
        case Kind::ProjectionSet: {
            const double k = static_cast<double>(bases_[id].cols());
            computed = {k, k, k};
            break;
        }
        case Kind::MklGrid:
            computed = ridge_stats(block_eigensystem(eta_index_of(id)),
                                   lambdas_[id % lambdas_.size()], n_);
            break;
    }
    std::lock_guard<std::mutex> lk(*cache_mutex_);
    if (!stats_cache_[id]) stats_cache_[id] = computed;
    return *stats_cache_[id];
}

Vector SmootherFamily::fit(std::size_t id, const Vector& y) const {
    if (y.size() != n_) throw input_error("fit: response length does not match family");
    switch (kind_) {
        case Kind::RidgePath: return ridge_fit(*eig_, lambdas_[id], y);
        case Kind::ProjectionSet: return projection_smoother(bases_[id], y).second;
        case Kind::MklGrid:
            return ridge_fit(block_eigensystem(eta_index_of(id)), lambdas_[id % lambdas_.size()],
                             y);
    }
    throw input_error("fit: bad family");
}

std::string SmootherFamily::member_label(std::size_t id) const {
    std::ostringstream out;
    switch (kind_) {
        case Kind::RidgePath: out << "lambda=" << lambdas_[id]; break;
        case Kind::ProjectionSet: out << "dim=" << bases_[id].cols(); break;
        case Kind::MklGrid:
            out << "eta[" << eta_index_of(id) << "] lambda=" << lambdas_[id % lambdas_.size()];
            break;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// bulk per-member arrays

FamilyProfile profile_family(const SmootherFamily& family, const Vector& y, int threads) {
    const std::size_t count = family.size();
    const int n = family.n();
    if (y.size() != n) throw input_error("profile_family: response length does not match");
    FamilyProfile prof;
    prof.df.resize(count);
    prof.tr_ata.resize(count);
    prof.minpen_factor.resize(count);
    prof.risk_ss.resize(count);

    const auto& ops = simd::active();
    const auto fill_ridge_block = [&](const Eigensystem& eig, const Vector& z,
                                      const std::vector<double>& lambdas, std::size_t offset) {
        parallel_for(lambdas.size(), threads, [&](std::size_t i) {
            const double nlam = static_cast<double>(n) * lambdas[i];
            const auto m = static_cast<std::size_t>(n);
            const auto t = ops.ridge_traces(eig.eigenvalues.data(), m, nlam);
            prof.df[offset + i] = t.df;
            prof.tr_ata[offset + i] = t.tr_ata;
            prof.minpen_factor[offset + i] = t.minpen_factor;
            prof.risk_ss[offset + i] =
                ops.shrink_residual_sq(eig.eigenvalues.data(), z.data(), m, nlam);
        });
    };

    switch (family.kind()) {
        case SmootherFamily::Kind::RidgePath: {
            const auto& eig = family.ridge_eigensystem();
            const Vector z = eig.eigenvectors.transpose() * y;
            fill_ridge_block(eig, z, family.lambda_grid(), 0);
            break;
        }
        case SmootherFamily::Kind::ProjectionSet: {
            parallel_for(count, threads, [&](std::size_t i) {
                auto [stats, fitted] = projection_smoother(family.projection_bases()[i], y);
                prof.df[i] = stats.df;
                prof.tr_ata[i] = stats.tr_ata;
                prof.minpen_factor[i] = stats.minpen_factor;
                prof.risk_ss[i] = ops.sum_sq_diff(fitted.data(), y.data(),
                                                  static_cast<std::size_t>(n));
            });
            break;
        }
        case SmootherFamily::Kind::MklGrid: {
            const auto& lambdas = family.lambda_grid();
            for (std::size_t b = 0; b < family.mkl_etas().size(); ++b) {
                const auto& eig = family.block_eigensystem(b);
                const Vector z = eig.eigenvectors.transpose() * y;
                fill_ridge_block(eig, z, lambdas, b * lambdas.size());
            }
            break;
        }
    }
    return prof;
}

std::vector<double> true_risk_profile(const SmootherFamily& family, const Vector& f,
                                      const Vector& y, int threads) {
    const std::size_t count = family.size();
    const int n = family.n();
    if (f.size() != n || y.size() != n)
        throw input_error("true_risk_profile: vector lengths do not match");
    std::vector<double> risks(count);
    const auto& ops = simd::active();

    const auto fill_ridge_block = [&](const Eigensystem& eig,
                                      const std::vector<double>& lambdas, std::size_t offset) {
        const Vector z = eig.eigenvectors.transpose() * y;
        const Vector fz = eig.eigenvectors.transpose() * f;
        // ||A y - F||^2 = ||s.z - Q^T F||^2 + ||F - Q Q^T F||^2; the second term is
        // zero for a full orthonormal basis, which eigendecompose always returns
        parallel_for(lambdas.size(), threads, [&](std::size_t i) {
            const double nlam = static_cast<double>(n) * lambdas[i];
            Vector shrunk(n);
            ops.shrink_apply(eig.eigenvalues.data(), z.data(), static_cast<std::size_t>(n),
                             nlam, shrunk.data());
            risks[offset + i] = ops.sum_sq_diff(shrunk.data(), fz.data(),
                                                static_cast<std::size_t>(n)) /
                                static_cast<double>(n);
        });
    };

    switch (family.kind()) {
        case SmootherFamily::Kind::RidgePath:
            fill_ridge_block(family.ridge_eigensystem(), family.lambda_grid(), 0);
            break;
        case SmootherFamily::Kind::ProjectionSet:
            parallel_for(count, threads, [&](std::size_t i) {
                const Vector fitted = family.fit(i, y);
                risks[i] = ops.sum_sq_diff(fitted.data(), f.data(),
                                           static_cast<std::size_t>(n)) /
                           static_cast<double>(n);
            });
            break;
        case SmootherFamily::Kind::MklGrid: {
            const auto& lambdas = family.lambda_grid();
            for (std::size_t b = 0; b < family.mkl_etas().size(); ++b)
                fill_ridge_block(family.block_eigensystem(b), lambdas, b * lambdas.size());
            break;
        }
    }
    return risks;
}

}  // namespace minpen
