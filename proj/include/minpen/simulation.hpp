#pragma once

#include "minpen/calibration.hpp"

namespace minpen {

/// Synthetic-data protocol: design points and RKHS atoms drawn i.i.d. standard
/// Gaussian, signal F_a = sum_i alpha_i k(x_a, z_i) with Gaussian alpha, plus
/// i.i.d. N(0, sigma^2) noise.
struct SimConfig {
    int n = 500;
    int d = 6;
    int m = 10;  // number of RKHS atoms in the signal
    double sigma = 1.0;
    std::string kernel = "exponential-product";
    std::uint64_t seed = 1;
    int replications = 20;
    std::size_t lambda_grid_size = 0;  // 0 -> max(n, 100)
    double cgrid_lo_factor = 1e-4;
    double cgrid_hi_factor = 10.0;
    double cgrid_ratio = 0.0;  // 0 -> exp(n^{-1/4})
    int threads = 1;

    void validate() const;
    CGrid cgrid_for(const Vector& y) const;
};

struct SyntheticDataset {
    PointSet pts;
    Vector f;    // true signal at the design points
    Vector y;    // f + eps
    Vector eps;
    double sigma2;
};

/// Fully deterministic in `seed`; draw order is x (row by row), z, alpha, eps.
SyntheticDataset generate(const SimConfig& config, std::uint64_t seed);

/// n^{-1} ||fhat - f||^2.
double true_risk(const Vector& fhat, const Vector& f);

/// Member minimizing the true risk (ties to smallest df) and that risk.
std::pair<std::size_t, double> oracle_select(const SmootherFamily& family, const Vector& f,
                                             const Vector& y, int threads = 1);

// ---------------------------------------------------------------------------
// jump experiment (df of the penalized argmin vs penalty strength)

struct JumpConfig {
    SimConfig sim;
    std::string variant = "single";  // "single" | "mkl"
    std::size_t eta_grid_size = 11;  // simplex grid for the discrete mkl curve
    int gradient_max_iters = 60;
};

struct JumpRow {
    double log_c_over_sigma2;  // natural log
    double df_minpen;          // argmin under C * (2 tr - tr of square)
    double df_half_ideal;      // argmin under C * tr (half the ideal penalty)
};

struct JumpResult {
    std::vector<std::string> curve_names;        // "single" | "mkl-grid", "mkl-gradient"
    std::vector<std::vector<JumpRow>> curves;
    double sigma2;
};

JumpResult run_jump_experiment(const JumpConfig& config);

// ---------------------------------------------------------------------------
// method comparison experiment

enum class Method { Minpen, Gcv, Cv10, MallowsKnownSigma, MklCv, MinpenSumKernel };

const char* method_name(Method m);
Method method_from_name(std::string_view name);

/// Methods run when the config names none: minpen/gcv/cv10/mallows for the
/// single-kernel protocol, minpen/mkl-cv/minpen-sum-kernel for two kernels.
std::vector<Method> default_compare_methods(std::string_view variant);

struct CompareConfig {
    SimConfig sim;                    // d = 4 is the usual protocol here
    std::vector<int> n_list{100, 200, 500};
    std::vector<Method> methods;      // empty -> default set for the variant
    std::string variant = "single";   // reference: oracle (single) / Mallows (mkl)
    int cv_folds = 10;
    std::size_t eta_grid_size = 6;
};

struct ReplicationRecord {
    int n = 0;
    int rep = 0;
    std::uint64_t seed = 0;
    Method method = Method::Minpen;
    std::string selected;     // member label, empty on failure
    double risk = 0.0;
    double reference_risk = 0.0;
    double sigma2_hat = 0.0;  // NaN when not applicable
    bool failed = false;
};

struct CompareCell {
    int n = 0;
    Method method = Method::Minpen;
    double mean_ratio = 0.0;  // risk / reference risk over successful reps
    double se_ratio = 0.0;
    int failures = 0;
    int used = 0;
};

struct CompareResult {
    std::vector<CompareCell> cells;
    std::vector<ReplicationRecord> records;
};

CompareResult run_comparison_experiment(const CompareConfig& config);

// ---------------------------------------------------------------------------
// Monte-Carlo check of the Gaussian concentration bounds

struct DiagnoseConfig {
    int dim = 50;
    long trials = 100000;  // at least 10^4
    std::vector<double> x_values{1.0, 2.0, 4.0};
    std::vector<double> theta_values{0.1, 0.5, 1.0, 2.0};
    std::uint64_t seed = 1;
    int threads = 1;
};

struct DiagnosticRow {
    std::string bound;  // "linear" | "quadratic" | "quadratic-identity"
    double x = 0.0;
    double theta = 0.0;  // NaN for the linear bound
    long trials = 0;
    long violations = 0;
    double rate = 0.0;
    double bound_value = 0.0;  // 2 e^{-x}
    double mc_se = 0.0;        // sqrt(bound (1 - bound) / trials)
    double exact_tail = 0.0;   // erfc(sqrt(x)) for the linear bound, NaN otherwise
};

std::vector<DiagnosticRow> concentration_diagnostics(const DiagnoseConfig& config);

// ---------------------------------------------------------------------------
// bias-variance decomposition along a family

struct BiasVarianceRow {
    double df;
    double bias;             // ||(A - I) F||^2 / n
    double variance;         // tr(A^T A) sigma^2 / n
    double minimal_penalty;  // sigma^2 (2 tr - tr of square) / n
    double ideal_penalty;    // 2 sigma^2 tr / n
    double expected_risk;    // bias + variance
};

/// Rows sorted by increasing df.
std::vector<BiasVarianceRow> bias_variance_curves(const SmootherFamily& family, const Vector& f,
                                                  double sigma2, int threads = 1);

}  // namespace minpen
