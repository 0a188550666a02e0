#include "minpen/simulation.hpp"

#include "minpen/simd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace minpen {

void SimConfig::validate() const {
    if (n < 10) throw input_error("sim config: n must be at least 10");
    if (d < 1) throw input_error("sim config: d must be at least 1");
    if (m < 1) throw input_error("sim config: m must be at least 1");
    if (!(sigma >= 0.0)) throw input_error("sim config: sigma must be nonnegative");
    if (replications < 1) throw input_error("sim config: replications must be at least 1");
    KernelSpec::from_name(kernel);  // throws on unknown kernels
}

CGrid SimConfig::cgrid_for(const Vector& y) const {
    const double mean = y.mean();
    const double vhat = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
    if (!(vhat > 0.0)) throw input_error("cgrid: response has zero sample variance");
    const double ratio = cgrid_ratio > 0.0 ? cgrid_ratio : default_cgrid_ratio(n);
    return CGrid::geometric(cgrid_lo_factor * vhat, cgrid_hi_factor * vhat, ratio);
}

SyntheticDataset generate(const SimConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    Matrix x(config.n, config.d);
    for (int i = 0; i < config.n; ++i)
        for (int j = 0; j < config.d; ++j) x(i, j) = rng.normal();
    Matrix z(config.m, config.d);
    for (int i = 0; i < config.m; ++i)
        for (int j = 0; j < config.d; ++j) z(i, j) = rng.normal();
    Vector alpha(config.m);
    for (int i = 0; i < config.m; ++i) alpha(i) = rng.normal();

    const KernelSpec spec = KernelSpec::from_name(config.kernel);
    Vector f = Vector::Zero(config.n);
    for (int a = 0; a < config.n; ++a)
        for (int i = 0; i < config.m; ++i)
            f(a) += alpha(i) *
                    kernel_value(spec, x.row(a).transpose(), z.row(i).transpose());

    Vector eps(config.n);
    for (int i = 0; i < config.n; ++i) eps(i) = config.sigma * rng.normal();

    SyntheticDataset data{PointSet(std::move(x)), std::move(f), Vector(), std::move(eps),
                          config.sigma * config.sigma};
    data.y = data.f + data.eps;
    return data;
}

double true_risk(const Vector& fhat, const Vector& f) {
    if (fhat.size() != f.size()) throw input_error("true_risk: vector lengths differ");
    return simd::active().sum_sq_diff(fhat.data(), f.data(),
                                      static_cast<std::size_t>(f.size())) /
           static_cast<double>(f.size());
}

std::pair<std::size_t, double> oracle_select(const SmootherFamily& family, const Vector& f,
                                             const Vector& y, int threads) {
    const std::vector<double> risks = true_risk_profile(family, f, y, threads);
    std::size_t best = 0;
    for (std::size_t i = 1; i < risks.size(); ++i) {
        if (risks[i] < risks[best] ||
            (risks[i] == risks[best] && family.df(i) < family.df(best)))
            best = i;
    }
    return {best, risks[best]};
}

// ---------------------------------------------------------------------------
// jump experiment

namespace {

// split d coordinates into two blocks and build one kernel per block
std::vector<Matrix> two_block_kernels(const KernelSpec& spec, const PointSet& pts) {
    const int d = pts.d();
    if (d < 2) throw input_error("mkl experiment: need d >= 2 to split coordinates");
    const int d1 = d / 2;
    PointSet left(Matrix(pts.pts.leftCols(d1)));
    PointSet right(Matrix(pts.pts.rightCols(d - d1)));
    return {build_kernel_matrix(spec, left), build_kernel_matrix(spec, right)};
}

std::vector<Vector> simplex_eta_grid(std::size_t count) {
    if (count < 2) throw input_error("mkl experiment: eta grid needs at least 2 points");
    std::vector<Vector> etas(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        Vector e(2);
        e << 1.0 - t, t;
        etas[i] = e;
    }
    return etas;
}

std::vector<JumpRow> jump_curve_from_profile(const FamilyProfile& profile, const CGrid& grid,
                                             double sigma2, int threads) {
    std::vector<JumpRow> rows(grid.values.size());
    parallel_for(grid.values.size(), threads, [&](std::size_t i) {
        const double c = grid.values[i];
        const std::size_t id_min = argmin_profile(profile, PenaltyRule::minimal(c), 0);
        // half the ideal penalty: C * df, i.e. ideal at C/2
        const std::size_t id_half = argmin_profile(profile, PenaltyRule::ideal(0.5 * c), 0);
        rows[i] = {std::log(c / sigma2), profile.df[id_min], profile.df[id_half]};
    });
    return rows;
}

std::vector<JumpRow> jump_curve_gradient(const std::vector<Matrix>& kernels, const Vector& y,
                                         const CGrid& grid, double sigma2, int max_iters,
                                         Vector eta_min, Vector eta_half) {
    const int n = static_cast<int>(y.size());
    const double lambda = 1.0 / static_cast<double>(n);  // nlam = 1; scale lives in eta
    std::vector<JumpRow> rows(grid.values.size());
    // Sweep C from large to small, warm-starting each descent at the previous
    // optimum (the initial eta comes from the discrete grid's argmin at the
    // top of the grid). The walk then approaches every optimum from the
    // regularized side; started from the interpolation plateau instead, the
    // criterion is locally flat there (residuals ~ 0, penalty derivative ~ 0)
    // and descent cannot move.
    constexpr double sweep_tol = 1e-5;  // per-C refinement only
    for (std::size_t i = grid.values.size(); i-- > 0;) {
        const double c = grid.values[i];
        eta_min = mkl_gradient_descent(kernels, eta_min, lambda, y, c, max_iters, 1e-10,
                                       MklPenalty::MinimalFactor, sweep_tol);
        const auto crit_min = mkl_criterion(kernels, eta_min, lambda, y, c);
        eta_half = mkl_gradient_descent(kernels, eta_half, lambda, y, c, max_iters, 1e-10,
                                        MklPenalty::DfOnly, sweep_tol);
        const auto crit_half =
            mkl_criterion(kernels, eta_half, lambda, y, c, MklPenalty::DfOnly);
        rows[i] = {std::log(c / sigma2), crit_min.stats.df, crit_half.stats.df};
    }
    return rows;
}

// grid member (eta, lambda) re-expressed at the sweep's fixed lambda = 1/n:
// A depends only on eta/lambda, so the equivalent weights are eta/(n lambda)
Vector gradient_sweep_init(const SmootherFamily& family, std::size_t member, int n) {
    const double scale = 1.0 / (static_cast<double>(n) * family.lambda_of(member));
    Vector eta = family.eta_of(member) * scale;
    if (eta.maxCoeff() <= 0.0) eta = Vector::Ones(eta.size());
    return eta;
}

}  // namespace

JumpResult run_jump_experiment(const JumpConfig& config) {
    config.sim.validate();
    if (!(config.sim.sigma > 0.0))
        throw input_error("jump experiment: needs a known sigma^2 > 0");
    const SyntheticDataset data = generate(config.sim, config.sim.seed);
    const CGrid grid = config.sim.cgrid_for(data.y);

    JumpResult out;
    out.sigma2 = data.sigma2;

    if (config.variant == "single") {
        const Matrix k = build_kernel_matrix(KernelSpec::from_name(config.sim.kernel), data.pts);
        Eigensystem eig = eigendecompose(k);
        const auto lambdas = default_lambda_grid(eig, config.sim.n, config.sim.lambda_grid_size);
        const auto family =
            SmootherFamily::ridge_path(std::move(eig), lambdas, config.sim.n);
        const auto profile = profile_family(family, data.y, config.sim.threads);
        out.curve_names.push_back("single");
        out.curves.push_back(
            jump_curve_from_profile(profile, grid, data.sigma2, config.sim.threads));
    } else if (config.variant == "mkl") {
        const auto kernels =
            two_block_kernels(KernelSpec::from_name(config.sim.kernel), data.pts);
        // discrete (eta, lambda) grid, covered by the finite-grid theory
        const Matrix sum = kernels[0] + kernels[1];
        Eigensystem sum_eig = eigendecompose(sum);
        const auto lambdas =
            default_lambda_grid(sum_eig, config.sim.n, config.sim.lambda_grid_size);
        const auto family = SmootherFamily::mkl_grid(
            kernels, simplex_eta_grid(config.eta_grid_size), lambdas);
        const auto profile = profile_family(family, data.y, config.sim.threads);
        out.curve_names.push_back("mkl-grid");
        out.curves.push_back(
            jump_curve_from_profile(profile, grid, data.sigma2, config.sim.threads));
        // continuous eta by gradient descent (not covered by the finite-grid
        // theory), initialized from the discrete solution at the largest C
        const double c_top = grid.values.back();
        const std::size_t top_min =
            argmin_profile(profile, PenaltyRule::minimal(c_top), config.sim.n);
        const std::size_t top_half =
            argmin_profile(profile, PenaltyRule::ideal(0.5 * c_top), config.sim.n);
        out.curve_names.push_back("mkl-gradient");
        out.curves.push_back(jump_curve_gradient(
            kernels, data.y, grid, data.sigma2, config.gradient_max_iters,
            gradient_sweep_init(family, top_min, config.sim.n),
            gradient_sweep_init(family, top_half, config.sim.n)));
    } else {
        throw input_error("jump experiment: variant must be single|mkl");
    }
    return out;
}

// ---------------------------------------------------------------------------
// comparison experiment

const char* method_name(Method m) {
    switch (m) {
        case Method::Minpen: return "minpen";
        case Method::Gcv: return "gcv";
        case Method::Cv10: return "cv10";
        case Method::MallowsKnownSigma: return "mallows-known-sigma2";
        case Method::MklCv: return "mkl-cv";
        case Method::MinpenSumKernel: return "minpen-sum-kernel";
    }
    return "?";
}

Method method_from_name(std::string_view name) {
    for (Method m : {Method::Minpen, Method::Gcv, Method::Cv10, Method::MallowsKnownSigma,
                     Method::MklCv, Method::MinpenSumKernel})
        if (name == method_name(m)) return m;
    throw input_error("unknown method '" + std::string(name) + "'");
}

std::vector<Method> default_compare_methods(std::string_view variant) {
    if (variant == "single")
        return {Method::Minpen, Method::Gcv, Method::Cv10, Method::MallowsKnownSigma};
    return {Method::Minpen, Method::MklCv, Method::MinpenSumKernel};
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RepOutcome {
    std::vector<ReplicationRecord> records;
};

// one replication of the single-kernel protocol: reference is the oracle
RepOutcome run_single_rep(const CompareConfig& config, int n, int rep, std::uint64_t seed,
                          const std::vector<Method>& methods) {
    SimConfig sim = config.sim;
    sim.n = n;
    const SyntheticDataset data = generate(sim, seed);
    const Matrix k = build_kernel_matrix(KernelSpec::from_name(sim.kernel), data.pts);
    Eigensystem eig = eigendecompose(k);
    const auto lambdas = default_lambda_grid(eig, n, sim.lambda_grid_size);
    const auto family = SmootherFamily::ridge_path(std::move(eig), lambdas, n);
    const auto profile = profile_family(family, data.y, sim.threads);
    const auto risks = true_risk_profile(family, data.f, data.y, sim.threads);

    std::size_t oracle_id = 0;
    for (std::size_t i = 1; i < risks.size(); ++i)
        if (risks[i] < risks[oracle_id] ||
            (risks[i] == risks[oracle_id] && profile.df[i] < profile.df[oracle_id]))
            oracle_id = i;
    const double reference = risks[oracle_id];

    RepOutcome out;
    for (Method m : methods) {
        ReplicationRecord rec;
        rec.n = n;
        rec.rep = rep;
        rec.seed = seed;
        rec.method = m;
        rec.reference_risk = reference;
        rec.sigma2_hat = kNaN;
        try {
            std::size_t id = 0;
            switch (m) {
                case Method::Minpen: {
                    CalibrationConfig cal;
                    cal.grid = sim.cgrid_for(data.y);
                    cal.threads = sim.threads;
                    const auto res = calibrate(family, data.y, cal);
                    rec.sigma2_hat = res.sigma2_hat;
                    id = res.selected_lambda;
                    break;
                }
                case Method::Gcv:
                    id = argmin_profile(profile, PenaltyRule::gcv(), n);
                    break;
                case Method::Cv10: {
                    const RegressionData reg{{k}, data.y};
                    const auto scores =
                        kfold_cv_scores(family, reg, config.cv_folds, seed, sim.threads);
                    id = 0;
                    for (std::size_t i = 1; i < scores.size(); ++i)
                        if (scores[i] < scores[id] ||
                            (scores[i] == scores[id] && profile.df[i] < profile.df[id]))
                            id = i;
                    break;
                }
                case Method::MallowsKnownSigma:
                    id = select_with_plugin(profile, data.sigma2);
                    break;
                default:
                    throw input_error(std::string("method ") + method_name(m) +
                                      " applies to the mkl variant only");
            }
            rec.selected = family.member_label(id);
            rec.risk = risks[id];
        } catch (const no_jump_error&) {
            rec.failed = true;
            rec.risk = kNaN;
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

// one replication of the two-kernel protocol: reference is Mallows with known
// sigma^2 on the same (eta, lambda) grid
RepOutcome run_mkl_rep(const CompareConfig& config, int n, int rep, std::uint64_t seed,
                       const std::vector<Method>& methods) {
    SimConfig sim = config.sim;
    sim.n = n;
    const SyntheticDataset data = generate(sim, seed);
    const auto kernels = two_block_kernels(KernelSpec::from_name(sim.kernel), data.pts);
    const Matrix sum = kernels[0] + kernels[1];
    const Eigensystem sum_eig = eigendecompose(sum);
    const auto lambdas = default_lambda_grid(sum_eig, n, sim.lambda_grid_size);
    const auto family =
        SmootherFamily::mkl_grid(kernels, simplex_eta_grid(config.eta_grid_size), lambdas);
    const auto profile = profile_family(family, data.y, sim.threads);
    const auto risks = true_risk_profile(family, data.f, data.y, sim.threads);

    const std::size_t mallows_id = select_with_plugin(profile, data.sigma2);
    const double reference = risks[mallows_id];

    RepOutcome out;
    for (Method m : methods) {
        ReplicationRecord rec;
        rec.n = n;
        rec.rep = rep;
        rec.seed = seed;
        rec.method = m;
        rec.reference_risk = reference;
        rec.sigma2_hat = kNaN;
        try {
            switch (m) {
                case Method::Minpen: {
                    CalibrationConfig cal;
                    cal.grid = sim.cgrid_for(data.y);
                    cal.threads = sim.threads;
                    const auto res = calibrate(family, data.y, cal);
                    rec.sigma2_hat = res.sigma2_hat;
                    rec.selected = family.member_label(res.selected_lambda);
                    rec.risk = risks[res.selected_lambda];
                    break;
                }
                case Method::MklCv: {
                    const RegressionData reg{kernels, data.y};
                    const auto scores =
                        kfold_cv_scores(family, reg, config.cv_folds, seed, sim.threads);
                    std::size_t id = 0;
                    for (std::size_t i = 1; i < scores.size(); ++i)
                        if (scores[i] < scores[id] ||
                            (scores[i] == scores[id] && profile.df[i] < profile.df[id]))
                            id = i;
                    rec.selected = family.member_label(id);
                    rec.risk = risks[id];
                    break;
                }
                case Method::MinpenSumKernel: {
                    // calibrate a plain ridge path on K1 + K2
                    const auto sum_family = SmootherFamily::ridge_path(
                        sum_eig, default_lambda_grid(sum_eig, n, sim.lambda_grid_size), n);
                    CalibrationConfig cal;
                    cal.grid = sim.cgrid_for(data.y);
                    cal.threads = sim.threads;
                    const auto res = calibrate(sum_family, data.y, cal);
                    rec.sigma2_hat = res.sigma2_hat;
                    rec.selected = sum_family.member_label(res.selected_lambda);
                    const Vector fitted = sum_family.fit(res.selected_lambda, data.y);
                    rec.risk = true_risk(fitted, data.f);
                    break;
                }
                case Method::MallowsKnownSigma:
                    rec.selected = family.member_label(mallows_id);
                    rec.risk = reference;
                    break;
                default:
                    throw input_error(std::string("method ") + method_name(m) +
                                      " applies to the single-kernel variant only");
            }
        } catch (const no_jump_error&) {
            rec.failed = true;
            rec.risk = kNaN;
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

CompareResult run_comparison_experiment(const CompareConfig& config) {
    config.sim.validate();
    if (config.variant != "single" && config.variant != "mkl")
        throw input_error("comparison experiment: variant must be single|mkl");
    if (config.n_list.empty()) throw input_error("comparison experiment: empty n list");
    const std::vector<Method> methods =
        config.methods.empty() ? default_compare_methods(config.variant) : config.methods;

    CompareResult result;
    const int reps = config.sim.replications;
    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        const int n = config.n_list[ni];
        std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
        // replications are independent jobs; records are assembled in rep order
        parallel_for(static_cast<std::size_t>(reps), config.sim.threads, [&](std::size_t r) {
            const std::uint64_t seed =
                derive_seed(config.sim.seed, ni * 1000003ULL + r);
            outcomes[r] = config.variant == "single"
                              ? run_single_rep(config, n, static_cast<int>(r), seed, methods)
                              : run_mkl_rep(config, n, static_cast<int>(r), seed, methods);
        });
        for (const auto& o : outcomes)
            result.records.insert(result.records.end(), o.records.begin(), o.records.end());

        for (Method m : methods) {
            CompareCell cell;
            cell.n = n;
            cell.method = m;
            std::vector<double> ratios;
            for (const auto& o : outcomes)
                for (const auto& rec : o.records)
                    if (rec.method == m) {
                        if (rec.failed) ++cell.failures;
                        else ratios.push_back(rec.risk / rec.reference_risk);
                    }
            cell.used = static_cast<int>(ratios.size());
            if (!ratios.empty()) {
                const double mean =
                    std::accumulate(ratios.begin(), ratios.end(), 0.0) / ratios.size();
                double var = 0.0;
                for (double r : ratios) var += (r - mean) * (r - mean);
                cell.mean_ratio = mean;
                cell.se_ratio = ratios.size() > 1
                                    ? std::sqrt(var / (ratios.size() - 1.0) / ratios.size())
                                    : 0.0;
            } else {
                cell.mean_ratio = kNaN;
                cell.se_ratio = kNaN;
            }
            result.cells.push_back(cell);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// concentration diagnostics

std::vector<DiagnosticRow> concentration_diagnostics(const DiagnoseConfig& config) {
    if (config.trials < 10000)
        throw input_error("diagnostics: need at least 10^4 trials");
    if (config.dim < 1) throw input_error("diagnostics: dim must be positive");
    const int n = config.dim;

    // fixed alpha and M for the whole run
    Rng setup(derive_seed(config.seed, 0));
    Vector alpha(n);
    for (int i = 0; i < n; ++i) alpha(i) = setup.normal();
    Matrix mat(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mat(i, j) = setup.normal() / std::sqrt(n);

    const double alpha_norm = alpha.norm();
    const double tr_mtm = (mat.transpose() * mat).trace();
    const Eigensystem mtm = eigendecompose(Matrix(mat.transpose() * mat));
    const double op_norm_sq = mtm.eigenvalues(0);  // ||M||^2

    const auto& xs = config.x_values;
    const auto& thetas = config.theta_values;
    const std::size_t lin_count = xs.size();
    const std::size_t quad_count = xs.size() * thetas.size();

    // per-block violation counters; integer sums are order-independent
    const long block_size = 4096;
    const long blocks = (config.trials + block_size - 1) / block_size;
    std::vector<std::vector<long>> lin_hits(static_cast<std::size_t>(blocks));
    std::vector<std::vector<long>> quad_hits(static_cast<std::size_t>(blocks));
    std::vector<std::vector<long>> ident_hits(static_cast<std::size_t>(blocks));

    parallel_for(static_cast<std::size_t>(blocks), config.threads, [&](std::size_t b) {
        std::vector<long> lin(lin_count, 0), quad(quad_count, 0), ident(quad_count, 0);
        const long start = static_cast<long>(b) * block_size;
        const long stop = std::min(config.trials, start + block_size);
        Vector xi(n), w(n);
        for (long t = start; t < stop; ++t) {
            Rng rng(derive_seed(config.seed, 1000000007ULL + static_cast<std::uint64_t>(t)));
            for (int i = 0; i < n; ++i) xi(i) = rng.normal();
            const double zlin = std::abs(
                simd::active().dot(alpha.data(), xi.data(), static_cast<std::size_t>(n)));
            w.noalias() = mat * xi;
            const double xi_sq = xi.squaredNorm();
            const double zquad = std::abs(w.squaredNorm() - tr_mtm);
            const double zident = std::abs(xi_sq - static_cast<double>(n));
            for (std::size_t ix = 0; ix < xs.size(); ++ix) {
                if (zlin > std::sqrt(2.0 * xs[ix]) * alpha_norm) ++lin[ix];
                for (std::size_t it = 0; it < thetas.size(); ++it) {
                    const double th = thetas[it];
                    const std::size_t cell = ix * thetas.size() + it;
                    if (zquad > th * tr_mtm + 2.0 * (1.0 + 1.0 / th) * op_norm_sq * xs[ix])
                        ++quad[cell];
                    if (zident > th * n + 2.0 * (1.0 + 1.0 / th) * xs[ix]) ++ident[cell];
                }
            }
        }
        lin_hits[b] = std::move(lin);
        quad_hits[b] = std::move(quad);
        ident_hits[b] = std::move(ident);
    });

    const auto total = [&](const std::vector<std::vector<long>>& hits, std::size_t cell) {
        long sum = 0;
        for (const auto& h : hits) sum += h[cell];
        return sum;
    };

    std::vector<DiagnosticRow> rows;
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
        DiagnosticRow row;
        row.bound = "linear";
        row.x = xs[ix];
        row.theta = kNaN;
        row.trials = config.trials;
        row.violations = total(lin_hits, ix);
        row.rate = static_cast<double>(row.violations) / config.trials;
        row.bound_value = 2.0 * std::exp(-xs[ix]);
        row.mc_se = std::sqrt(row.bound_value * std::max(0.0, 1.0 - row.bound_value) /
                              config.trials);
        row.exact_tail = std::erfc(std::sqrt(xs[ix]));
        rows.push_back(row);
    }
    for (const char* kind : {"quadratic", "quadratic-identity"}) {
        const auto& hits = std::string_view(kind) == "quadratic" ? quad_hits : ident_hits;
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            for (std::size_t it = 0; it < thetas.size(); ++it) {
                DiagnosticRow row;
                row.bound = kind;
                row.x = xs[ix];
                row.theta = thetas[it];
                row.trials = config.trials;
                row.violations = total(hits, ix * thetas.size() + it);
                row.rate = static_cast<double>(row.violations) / config.trials;
                row.bound_value = 2.0 * std::exp(-xs[ix]);
                row.mc_se = std::sqrt(row.bound_value *
                                      std::max(0.0, 1.0 - row.bound_value) / config.trials);
                row.exact_tail = kNaN;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// bias-variance curves

std::vector<BiasVarianceRow> bias_variance_curves(const SmootherFamily& family, const Vector& f,
                                                  double sigma2, int threads) {
    const double n = static_cast<double>(family.n());
    const std::vector<double> bias = bias_profile(family, f, threads);
    std::vector<BiasVarianceRow> rows(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto& st = family.stats(i);
        rows[i] = {st.df,
                   bias[i] / n,
                   st.tr_ata * sigma2 / n,
                   st.minpen_factor * sigma2 / n,
                   2.0 * st.df * sigma2 / n,
                   (bias[i] + st.tr_ata * sigma2) / n};
    }
    std::sort(rows.begin(), rows.end(),
              [](const BiasVarianceRow& a, const BiasVarianceRow& b) { return a.df < b.df; });
    return rows;
}

}  // namespace minpen
