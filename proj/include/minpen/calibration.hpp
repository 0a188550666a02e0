#pragma once

#include "minpen/criteria.hpp"

namespace minpen {

/// Geometric grid of candidate penalty constants C. Log-scale with a constant
/// step ratio; the default ratio exp(n^{-1/4}) matches the resolution the
/// variance-consistency bounds ask for.
struct CGrid {
    std::vector<double> values;  // strictly increasing, at least 10 points
    double scale = 0.0;          // the multiplicative step

    static CGrid geometric(double lo, double hi, double ratio);
    /// [1e-4 vhat, 10 vhat] with ratio exp(n^{-1/4}), vhat = sample variance of y.
    static CGrid default_for(const Vector& y, int n);
};

double default_cgrid_ratio(int n);

struct PathPoint {
    double c;
    std::size_t lambda_id;  // argmin of ||A y - y||^2 + C (2 tr - tr of square)
    double df;
};
using MinPenPath = std::vector<PathPoint>;

MinPenPath minpen_path(const FamilyProfile& profile, const CGrid& grid, int threads = 1);
MinPenPath minpen_path(const SmootherFamily& family, const Vector& y, const CGrid& grid,
                       int threads = 1);

enum class VarianceRule { Auto, Window, RelaxedWindow, MaxJump };

const char* variance_rule_name(VarianceRule rule);
VarianceRule variance_rule_from_name(std::string_view name);

struct JumpCandidate {
    double c;     // geometric mean of the grid pair
    double drop;  // df decrease across the pair
};

struct VarianceEstimate {
    double sigma2_hat = 0.0;
    VarianceRule rule_used = VarianceRule::MaxJump;
    double jump_size = 0.0;
    // every local jump above half the maximal one, so ambiguous paths are visible
    std::vector<JumpCandidate> local_jumps;
};

/// Step 2 of the calibration algorithm. Window rule: smallest grid C whose
/// selected df lies in [n^{3/4}, n/10] (that window is empty below n = 10^4 and
/// the rule then refuses, pointing at max-jump). Relaxed window: smallest C such
/// that df < n^{3/4} for all grid points above C + delta and df > n/10 below
/// C - delta, with delta = n^{-1/4 + xi} taken as a log-scale offset. Max jump:
/// geometric midpoint of the consecutive pair with the largest df drop.
/// Auto = window for n >= 10^4, max-jump otherwise.
VarianceEstimate estimate_variance(const MinPenPath& path, int n,
                                   VarianceRule rule = VarianceRule::Auto, double xi = 0.05);

/// Step 3: argmin of ||A y - y||^2 + 2 sigma2_hat tr(A), ties to smallest df.
std::size_t select_with_plugin(const FamilyProfile& profile, double sigma2_hat);
std::size_t select_with_plugin(const SmootherFamily& family, const Vector& y,
                               double sigma2_hat, int threads = 1);

struct CalibrationConfig {
    std::optional<CGrid> grid;  // default: CGrid::default_for(y, n)
    VarianceRule rule = VarianceRule::Auto;
    double xi = 0.05;
    int threads = 1;
};

struct CalibrationResult {
    double sigma2_hat = 0.0;
    VarianceRule rule_used = VarianceRule::MaxJump;
    double jump_size = 0.0;
    std::size_t selected_lambda = 0;
    double df_selected = 0.0;
    MinPenPath path;
    std::vector<JumpCandidate> local_jumps;
    bool degenerate_data = false;  // response had (numerically) zero variance
};

/// The full three-step algorithm. On a no-jump failure the path computed so far
/// is stored into *diagnostic_path (when given) before the error propagates.
CalibrationResult calibrate(const SmootherFamily& family, const Vector& y,
                            const CalibrationConfig& config = {},
                            MinPenPath* diagnostic_path = nullptr);

struct AssumptionReport {
    // witnesses for df(lambda_1) >= n/2 and df(lambda_2) <= sqrt(n) with bias
    // at most sigma^2 sqrt(n ln n)
    bool a1_ok = false, a2_ok = false;
    double a1_df = 0.0, a1_bias = 0.0;
    double a2_df = 0.0, a2_bias = 0.0;
    // smallest kappa with df sigma^2 <= kappa (tr_ata sigma^2 + bias) over the family
    double kappa_hat = 0.0;
    // least-squares fit of mu_j ~ L j^{-alpha} (ridge families only, else NaN)
    double decay_alpha = 0.0, decay_l1 = 0.0, decay_l2 = 0.0;
};

/// Simulation-side checks of the theorem assumptions (needs the true signal).
AssumptionReport check_assumptions(const SmootherFamily& family, const Vector& f,
                                   double sigma2, int threads = 1);

/// ||(A - I) f||^2 per member.
std::vector<double> bias_profile(const SmootherFamily& family, const Vector& f,
                                 int threads = 1);

/// kappa = (L2/L1)^{1/alpha} * int_0^inf du/(1+u^a) / int_1^inf du/(1+u^a)^2,
/// the admissible constant when the kernel eigenvalues decay like j^{-alpha}.
/// Adaptive quadrature at relative tolerance 1e-8; alpha must exceed 1.
double kappa_from_decay(double alpha, double l1, double l2);

}  // namespace minpen
