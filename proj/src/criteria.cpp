#include "minpen/criteria.hpp"

#include "minpen/simd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace minpen {

double empirical_risk_ss(const Vector& fitted, const Vector& y) {
    if (fitted.size() != y.size())
        throw input_error("empirical_risk_ss: vector lengths differ");
    return simd::active().sum_sq_diff(fitted.data(), y.data(),
                                      static_cast<std::size_t>(y.size()));
}

double minimal_penalty(const SmootherStats& stats, double c) {
    if (c < 0.0) throw input_error("minimal_penalty: C must be nonnegative");
    return c * stats.minpen_factor;
}

double ideal_penalty(const SmootherStats& stats, double c) {
    if (c < 0.0) throw input_error("ideal_penalty: C must be nonnegative");
    return 2.0 * c * stats.df;
}

double gcv_score(const SmootherStats& stats, double rss, int n) {
    const double ratio = stats.df / static_cast<double>(n);
    if (ratio > 1.0 - 1e-6) return std::numeric_limits<double>::infinity();
    const double denom = 1.0 - ratio;
    return (rss / static_cast<double>(n)) / (denom * denom);
}

namespace {

// smallest-df tie resolution: rescan members whose total equals the minimum
// bit for bit (totals must be computed with the same mul-then-add expression
// used by min_affine)
std::size_t resolve_ties(const std::vector<double>& base, const std::vector<double>& slope,
                         double c, const std::vector<double>& df, simd::MinResult best) {
    std::size_t pick = best.index;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double total = base[i] + c * slope[i];
        if (total == best.value && df[i] < df[pick]) pick = i;
    }
    return pick;
}

}  // namespace

std::size_t argmin_profile(const FamilyProfile& profile, const PenaltyRule& rule, int n) {
    const std::size_t count = profile.size();
    if (count == 0) throw input_error("argmin: empty family");
    const auto& ops = simd::active();

    switch (rule.kind) {
        case PenaltyRule::Kind::None: {
            const auto best = ops.min_affine(profile.risk_ss.data(), profile.df.data(), count, 0.0);
            return resolve_ties(profile.risk_ss, profile.df, 0.0, profile.df, best);
        }
        case PenaltyRule::Kind::Minimal: {
            if (rule.c < 0.0) throw input_error("argmin: C must be nonnegative");
            const auto best =
                ops.min_affine(profile.risk_ss.data(), profile.minpen_factor.data(), count, rule.c);
            return resolve_ties(profile.risk_ss, profile.minpen_factor, rule.c, profile.df, best);
        }
        case PenaltyRule::Kind::Ideal: {
            if (rule.c < 0.0) throw input_error("argmin: C must be nonnegative");
            const auto best =
                ops.min_affine(profile.risk_ss.data(), profile.df.data(), count, 2.0 * rule.c);
            return resolve_ties(profile.risk_ss, profile.df, 2.0 * rule.c, profile.df, best);
        }
        case PenaltyRule::Kind::Gcv: {
            double best = std::numeric_limits<double>::infinity();
            std::size_t pick = count;  // sentinel: all excluded
            for (std::size_t i = 0; i < count; ++i) {
                const SmootherStats stats{profile.df[i], profile.tr_ata[i],
                                          profile.minpen_factor[i]};
                const double score = gcv_score(stats, profile.risk_ss[i], n);
                if (std::isinf(score)) continue;
                if (pick == count || score < best ||
                    (score == best && profile.df[i] < profile.df[pick])) {
                    best = score;
                    pick = i;
                }
            }
            if (pick == count)
                throw numeric_error("gcv: every member is excluded (df too close to n)");
            return pick;
        }
    }
    throw input_error("argmin: bad penalty rule");
}

std::size_t argmin_over_family(const SmootherFamily& family, const Vector& y,
                               const PenaltyRule& rule, int threads) {
    return argmin_profile(profile_family(family, y, threads), rule, family.n());
}

// ---------------------------------------------------------------------------
// k-fold cross-validation with kernel refit on training rows

std::vector<std::vector<int>> make_folds(int n, int k, std::uint64_t seed) {
    if (k < 2) throw input_error("cv: need at least 2 folds");
    if (n < k) throw input_error("cv: more folds than observations");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    shuffle(order, rng);
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    const int base = n / k, extra = n % k;
    int at = 0;
    for (int f = 0; f < k; ++f) {
        const int len = base + (f < extra ? 1 : 0);
        folds[static_cast<std::size_t>(f)].assign(order.begin() + at, order.begin() + at + len);
        std::sort(folds[static_cast<std::size_t>(f)].begin(),
                  folds[static_cast<std::size_t>(f)].end());
        at += len;
    }
    return folds;
}

namespace {

Matrix submatrix(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m(rows[i], cols[j]);
    return out;
}

// held-out SS/|fold| per lambda for one effective kernel, one fold.
// The refit on m training rows solves the same per-sample objective, so the
// training smoother is K_tr (K_tr + m lambda I)^{-1}.
std::vector<double> fold_scores(const Matrix& g, const Vector& y,
                                const std::vector<int>& test, const std::vector<int>& train,
                                const std::vector<double>& lambdas) {
    if (train.empty()) throw input_error("cv: fold with zero training rows");
    const auto m = static_cast<int>(train.size());
    const Matrix g_tr = submatrix(g, train, train);
    const Matrix g_cross = submatrix(g, test, train);
    Vector y_tr(m), y_te(test.size());
    for (int i = 0; i < m; ++i) y_tr(i) = y(train[static_cast<std::size_t>(i)]);
    for (std::size_t i = 0; i < test.size(); ++i)
        y_te(static_cast<Eigen::Index>(i)) = y(test[i]);

    const Eigensystem eig = eigendecompose(g_tr);
    const Vector w = eig.eigenvectors.transpose() * y_tr;
    const Matrix p = g_cross * eig.eigenvectors;

    std::vector<double> out(lambdas.size());
    Vector coef(m);
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const double mlam = static_cast<double>(m) * lambdas[li];
        for (int j = 0; j < m; ++j) {
            const double denom = eig.eigenvalues(j) + mlam;
            coef(j) = denom > 0.0 ? w(j) / denom : 0.0;
        }
        const Vector pred = p * coef;
        out[li] = (y_te - pred).squaredNorm() / static_cast<double>(test.size());
    }
    return out;
}

Matrix effective_kernel_for(const SmootherFamily& family, const RegressionData& data,
                            std::size_t eta_index) {
    if (family.kind() == SmootherFamily::Kind::RidgePath) {
        if (data.kernels.size() != 1)
            throw input_error("cv: a ridge family needs exactly one kernel matrix");
        return data.kernels.front();
    }
    if (data.kernels.size() != family.mkl_kernels().size())
        throw input_error("cv: kernel count does not match the family");
    return mkl_effective_kernel(data.kernels, family.mkl_etas()[eta_index]);
}

}  // namespace

std::vector<double> kfold_cv_scores(const SmootherFamily& family, const RegressionData& data,
                                    int k, std::uint64_t seed, int threads) {
    if (family.kind() == SmootherFamily::Kind::ProjectionSet)
        throw input_error("cv: projection families do not support refitting");
    const int n = family.n();
    if (data.y.size() != n) throw input_error("cv: response length does not match family");
    const auto folds = make_folds(n, k, seed);
    const auto& lambdas = family.lambda_grid();
    const std::size_t blocks =
        family.kind() == SmootherFamily::Kind::MklGrid ? family.mkl_etas().size() : 1;

    std::vector<double> scores(family.size(), 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        const Matrix g = effective_kernel_for(family, data, b);
        // fold -> per-lambda scores, then a deterministic fold-ordered reduction
        std::vector<std::vector<double>> per_fold(folds.size());
        parallel_for(folds.size(), threads, [&](std::size_t f) {
            std::vector<int> train;
            train.reserve(static_cast<std::size_t>(n) - folds[f].size());
            for (int i = 0; i < n; ++i)
                if (!std::binary_search(folds[f].begin(), folds[f].end(), i)) train.push_back(i);
            per_fold[f] = fold_scores(g, data.y, folds[f], train, lambdas);
        });
        for (const auto& fs : per_fold)
            for (std::size_t li = 0; li < lambdas.size(); ++li)
                scores[b * lambdas.size() + li] += fs[li] / static_cast<double>(folds.size());
    }
    return scores;
}

double kfold_cv_score(const SmootherFamily& family, std::size_t member,
                      const RegressionData& data, int k, std::uint64_t seed) {
    if (family.kind() == SmootherFamily::Kind::ProjectionSet)
        throw input_error("cv: projection families do not support refitting");
    const int n = family.n();
    if (data.y.size() != n) throw input_error("cv: response length does not match family");
    const auto folds = make_folds(n, k, seed);
    const std::size_t eta_index =
        family.kind() == SmootherFamily::Kind::MklGrid ? family.eta_index_of(member) : 0;
    const Matrix g = effective_kernel_for(family, data, eta_index);
    const std::vector<double> lambdas{family.lambda_of(member)};
    double score = 0.0;
    for (const auto& fold : folds) {
        std::vector<int> train;
        train.reserve(static_cast<std::size_t>(n) - fold.size());
        for (int i = 0; i < n; ++i)
            if (!std::binary_search(fold.begin(), fold.end(), i)) train.push_back(i);
        score += fold_scores(g, data.y, fold, train, lambdas)[0] /
                 static_cast<double>(folds.size());
    }
    return score;
}

}  // namespace minpen
