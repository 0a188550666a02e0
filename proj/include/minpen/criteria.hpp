#pragma once

#include "minpen/smoothers.hpp"

namespace minpen {

/// Unnormalized empirical risk ||fitted - y||^2 (the selection algorithm works
/// with plain sums of squares; normalized forms appear only in reports).
double empirical_risk_ss(const Vector& fitted, const Vector& y);

/// C * (2 tr(A) - tr(A^T A)); the smallest penalty level that stops the
/// penalized criterion from drifting to overfitting members once C > sigma^2.
double minimal_penalty(const SmootherStats& stats, double c);

/// 2 C tr(A), the unbiased-risk (Mallows) penalty at noise level C.
double ideal_penalty(const SmootherStats& stats, double c);

/// (rss/n) / (1 - df/n)^2. Members with df/n > 1 - 1e-6 get +infinity so the
/// argmin skips them (GCV blows up near interpolating smoothers).
double gcv_score(const SmootherStats& stats, double rss, int n);

struct PenaltyRule {
    enum class Kind { None, Minimal, Ideal, Gcv };
    Kind kind = Kind::None;
    double c = 0.0;

    static PenaltyRule none() { return {Kind::None, 0.0}; }
    static PenaltyRule minimal(double c) { return {Kind::Minimal, c}; }
    static PenaltyRule ideal(double c) { return {Kind::Ideal, c}; }
    static PenaltyRule gcv() { return {Kind::Gcv, 0.0}; }
};

/// Index minimizing empirical risk + penalty over the family; exact ties go to
/// the member with the smallest df.
std::size_t argmin_over_family(const SmootherFamily& family, const Vector& y,
                               const PenaltyRule& rule, int threads = 1);

/// Same argmin on precomputed per-member arrays.
std::size_t argmin_profile(const FamilyProfile& profile, const PenaltyRule& rule, int n);

/// Data needed to refit a family member on row subsets: the full kernel
/// matrices (one for a ridge path, p for a multiple-kernel grid) plus the
/// response. Held-out predictions use the cross block of the same matrices.
struct RegressionData {
    std::vector<Matrix> kernels;
    Vector y;
};

/// Seeded partition of 0..n-1 into k near-equal random folds.
std::vector<std::vector<int>> make_folds(int n, int k, std::uint64_t seed);

/// Mean over folds of (held-out sum of squares / fold size) for every family
/// member. Projection families do not support refitting and are rejected.
std::vector<double> kfold_cv_scores(const SmootherFamily& family, const RegressionData& data,
                                    int k, std::uint64_t seed, int threads = 1);

double kfold_cv_score(const SmootherFamily& family, std::size_t member,
                      const RegressionData& data, int k, std::uint64_t seed);

}  // namespace minpen
