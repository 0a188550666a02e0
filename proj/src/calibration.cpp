#include "minpen/calibration.hpp"

#include "minpen/simd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace minpen {

double default_cgrid_ratio(int n) { return std::exp(std::pow(static_cast<double>(n), -0.25)); }

CGrid CGrid::geometric(double lo, double hi, double ratio) {
    if (!(lo > 0.0) || !(hi > lo)) throw input_error("cgrid: need 0 < lo < hi");
    if (!(ratio > 1.0)) throw input_error("cgrid: step ratio must exceed 1");
    const auto count =
        static_cast<std::size_t>(std::ceil(std::log(hi / lo) / std::log(ratio) - 1e-12)) + 1;
    if (count < 10) throw input_error("cgrid: fewer than 10 points; widen the span");
    CGrid grid;
    grid.scale = ratio;
    grid.values.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        grid.values[i] = lo * std::pow(ratio, static_cast<double>(i));
    return grid;
}

CGrid CGrid::default_for(const Vector& y, int n) {
    if (y.size() < 2) throw input_error("cgrid: need at least 2 observations");
    const double mean = y.mean();
    const double vhat = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
    if (!(vhat > 0.0))
        throw input_error("cgrid: response has zero sample variance (degenerate data)");
    return geometric(1e-4 * vhat, 10.0 * vhat, default_cgrid_ratio(n));
}

MinPenPath minpen_path(const FamilyProfile& profile, const CGrid& grid, int threads) {
    if (profile.size() == 0) throw input_error("minpen_path: empty family");
    MinPenPath path(grid.values.size());
    parallel_for(grid.values.size(), threads, [&](std::size_t i) {
        const std::size_t id =
            argmin_profile(profile, PenaltyRule::minimal(grid.values[i]), 0);
        path[i] = {grid.values[i], id, profile.df[id]};
    });
    return path;
}

MinPenPath minpen_path(const SmootherFamily& family, const Vector& y, const CGrid& grid,
                       int threads) {
    return minpen_path(profile_family(family, y, threads), grid, threads);
}

const char* variance_rule_name(VarianceRule rule) {
    switch (rule) {
        case VarianceRule::Auto: return "auto";
        case VarianceRule::Window: return "window";
        case VarianceRule::RelaxedWindow: return "relaxed-window";
        case VarianceRule::MaxJump: return "max-jump";
    }
    return "?";
}

VarianceRule variance_rule_from_name(std::string_view name) {
    if (name == "auto") return VarianceRule::Auto;
    if (name == "window") return VarianceRule::Window;
    if (name == "relaxed-window") return VarianceRule::RelaxedWindow;
    if (name == "max-jump") return VarianceRule::MaxJump;
    throw input_error("unknown variance rule '" + std::string(name) +
                      "' (expected auto|window|relaxed-window|max-jump)");
}

namespace {

std::vector<JumpCandidate> collect_local_jumps(const MinPenPath& path, double max_drop) {
    std::vector<JumpCandidate> jumps;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double drop = path[i].df - path[i + 1].df;
        if (drop > 0.5 * max_drop)
            jumps.push_back({std::sqrt(path[i].c * path[i + 1].c), drop});
    }
    return jumps;
}

VarianceEstimate estimate_max_jump(const MinPenPath& path) {
    double max_drop = 0.0;
    std::size_t at = path.size();
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double drop = path[i].df - path[i + 1].df;
        if (drop > max_drop) {
            max_drop = drop;
            at = i;
        }
    }
    if (at == path.size())
        throw no_jump_error("no jump detected: df(lambda_min(C)) never decreases along the grid");
    VarianceEstimate est;
    est.sigma2_hat = std::sqrt(path[at].c * path[at + 1].c);
    est.rule_used = VarianceRule::MaxJump;
    est.jump_size = max_drop;
    est.local_jumps = collect_local_jumps(path, max_drop);
    return est;
}

VarianceEstimate estimate_window(const MinPenPath& path, int n) {
    const double lo = std::pow(static_cast<double>(n), 0.75);
    const double hi = static_cast<double>(n) / 10.0;
    if (lo > hi * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "the df window [n^(3/4), n/10] = [" << lo << ", " << hi
            << "] is empty for n = " << n << " (< 10^4); use the max-jump rule";
        throw no_jump_error(msg.str());
    }
    const double eps = 1e-9 * static_cast<double>(n);
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i].df >= lo - eps && path[i].df <= hi + eps) {
            VarianceEstimate est;
            est.sigma2_hat = path[i].c;
            est.rule_used = VarianceRule::Window;
            est.jump_size = i > 0 ? path[i - 1].df - path[i].df : 0.0;
            return est;
        }
    }
    std::ostringstream msg;
    msg << "no grid point has df(lambda_min(C)) inside [" << lo << ", " << hi
        << "]; the path jumps across the window (try the max-jump rule)";
    throw no_jump_error(msg.str());
}

VarianceEstimate estimate_relaxed(const MinPenPath& path, int n, double xi) {
    if (!(xi > 0.0)) throw input_error("relaxed-window: xi must be positive");
    const double delta = std::pow(static_cast<double>(n), -0.25 + xi);  // log-scale offset
    const double upper_df = std::pow(static_cast<double>(n), 0.75);
    const double lower_df = static_cast<double>(n) / 10.0;

    const auto admissible = [&](std::size_t i) {
        const double log_c = std::log(path[i].c);
        // both sides of the +-delta window must be witnessed by grid points,
        // otherwise a boundary C would qualify vacuously with no separation shown
        bool has_above = false, has_below = false;
        for (std::size_t j = 0; j < path.size(); ++j) {
            const double log_cj = std::log(path[j].c);
            if (log_cj > log_c + delta) {
                has_above = true;
                if (!(path[j].df < upper_df)) return false;
            }
            if (log_cj < log_c - delta) {
                has_below = true;
                if (!(path[j].df > lower_df)) return false;
            }
        }
        return has_above && has_below;
    };

    // the admissible C form an interval; its log-midpoint is admissible too and,
    // unlike the smallest admissible C, carries no -delta bias
    std::size_t first = path.size(), last = path.size();
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (admissible(i)) {
            if (first == path.size()) first = i;
            last = i;
        }
    }
    if (first == path.size())
        throw no_jump_error(
            "relaxed-window: no C separates df > n/10 below from df < n^(3/4) above");

    VarianceEstimate est;
    est.sigma2_hat = std::sqrt(path[first].c * path[last].c);
    est.rule_used = VarianceRule::RelaxedWindow;
    // df drop across the +-delta neighborhood of the midpoint
    const double log_mid = std::log(est.sigma2_hat);
    double df_below = path.front().df, df_above = path.back().df;
    for (std::size_t j = 0; j < path.size(); ++j)
        if (std::log(path[j].c) < log_mid - delta) df_below = path[j].df;
    for (std::size_t j = path.size(); j-- > 0;)
        if (std::log(path[j].c) > log_mid + delta) df_above = path[j].df;
    est.jump_size = df_below - df_above;
    return est;
}

}  // namespace

VarianceEstimate estimate_variance(const MinPenPath& path, int n, VarianceRule rule, double xi) {
    if (path.empty()) throw input_error("estimate_variance: empty path");
    switch (rule) {
        case VarianceRule::Window: return estimate_window(path, n);
        case VarianceRule::RelaxedWindow: return estimate_relaxed(path, n, xi);
        case VarianceRule::MaxJump: return estimate_max_jump(path);
        case VarianceRule::Auto:
            if (n >= 10000) {
                try {
                    return estimate_window(path, n);
                } catch (const no_jump_error&) {
                    return estimate_max_jump(path);
                }
            }
            return estimate_max_jump(path);
    }
    throw input_error("estimate_variance: bad rule");
}

std::size_t select_with_plugin(const FamilyProfile& profile, double sigma2_hat) {
    if (!(sigma2_hat >= 0.0)) throw input_error("select_with_plugin: need sigma2 >= 0");
    return argmin_profile(profile, PenaltyRule::ideal(sigma2_hat), 0);
}

std::size_t select_with_plugin(const SmootherFamily& family, const Vector& y,
                               double sigma2_hat, int threads) {
    return select_with_plugin(profile_family(family, y, threads), sigma2_hat);
}

CalibrationResult calibrate(const SmootherFamily& family, const Vector& y,
                            const CalibrationConfig& config, MinPenPath* diagnostic_path) {
    const FamilyProfile profile = profile_family(family, y, config.threads);

    const double mean = y.mean();
    const double vhat =
        (y.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(y.size() - 1, 1));
    const double yscale = std::max(1.0, y.cwiseAbs().maxCoeff());
    if (!(vhat > 1e-15 * yscale * yscale)) {
        // constant response: no noise scale to find, fall back to risk-only selection
        CalibrationResult res;
        res.degenerate_data = true;
        res.sigma2_hat = 0.0;
        res.rule_used = config.rule;
        res.selected_lambda = argmin_profile(profile, PenaltyRule::none(), family.n());
        res.df_selected = profile.df[res.selected_lambda];
        return res;
    }

    const CGrid grid = config.grid ? *config.grid : CGrid::default_for(y, family.n());
    MinPenPath path = minpen_path(profile, grid, config.threads);
    if (diagnostic_path) *diagnostic_path = path;

    const VarianceEstimate est = estimate_variance(path, family.n(), config.rule, config.xi);

    CalibrationResult res;
    res.sigma2_hat = est.sigma2_hat;
    res.rule_used = est.rule_used;
    res.jump_size = est.jump_size;
    res.local_jumps = est.local_jumps;
    res.path = std::move(path);
    res.selected_lambda = select_with_plugin(profile, est.sigma2_hat);
    res.df_selected = profile.df[res.selected_lambda];
    return res;
}

// ---------------------------------------------------------------------------
// assumption checks

std::vector<double> bias_profile(const SmootherFamily& family, const Vector& f, int threads) {
    const int n = family.n();
    if (f.size() != n) throw input_error("bias_profile: signal length does not match");
    std::vector<double> bias(family.size());
    const auto& ops = simd::active();

    const auto fill_ridge_block = [&](const Eigensystem& eig,
                                      const std::vector<double>& lambdas, std::size_t offset) {
        const Vector fz = eig.eigenvectors.transpose() * f;
        parallel_for(lambdas.size(), threads, [&](std::size_t i) {
            bias[offset + i] = ops.shrink_residual_sq(eig.eigenvalues.data(), fz.data(),
                                                      static_cast<std::size_t>(n),
                                                      static_cast<double>(n) * lambdas[i]);
        });
    };

    switch (family.kind()) {
        case SmootherFamily::Kind::RidgePath:
            fill_ridge_block(family.ridge_eigensystem(), family.lambda_grid(), 0);
            break;
        case SmootherFamily::Kind::ProjectionSet:
            parallel_for(family.size(), threads, [&](std::size_t i) {
                const Vector fitted = family.fit(i, f);
                bias[i] = ops.sum_sq_diff(fitted.data(), f.data(), static_cast<std::size_t>(n));
            });
            break;
        case SmootherFamily::Kind::MklGrid: {
            const auto& lambdas = family.lambda_grid();
            for (std::size_t b = 0; b < family.mkl_etas().size(); ++b)
                fill_ridge_block(family.block_eigensystem(b), lambdas, b * lambdas.size());
            break;
        }
    }
    return bias;
}

AssumptionReport check_assumptions(const SmootherFamily& family, const Vector& f,
                                   double sigma2, int threads) {
    const int n = family.n();
    const std::vector<double> bias = bias_profile(family, f, threads);
    AssumptionReport rep;
    const double nn = static_cast<double>(n);
    const double bias_bound = sigma2 * std::sqrt(nn * std::log(nn));

    double a1_best = std::numeric_limits<double>::infinity();
    double a2_best = std::numeric_limits<double>::infinity();
    rep.a1_df = rep.a2_df = std::numeric_limits<double>::quiet_NaN();
    rep.a1_bias = rep.a2_bias = std::numeric_limits<double>::quiet_NaN();
    rep.kappa_hat = 0.0;
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto& st = family.stats(i);
        if (st.df >= nn / 2.0 && bias[i] < a1_best) {
            a1_best = bias[i];
            rep.a1_df = st.df;
            rep.a1_bias = bias[i];
        }
        if (st.df <= std::sqrt(nn) && bias[i] < a2_best) {
            a2_best = bias[i];
            rep.a2_df = st.df;
            rep.a2_bias = bias[i];
        }
        const double denom = st.tr_ata * sigma2 + bias[i];
        if (denom > 0.0) rep.kappa_hat = std::max(rep.kappa_hat, st.df * sigma2 / denom);
    }
    rep.a1_ok = a1_best <= bias_bound;
    rep.a2_ok = a2_best <= bias_bound;

    rep.decay_alpha = rep.decay_l1 = rep.decay_l2 = std::numeric_limits<double>::quiet_NaN();
    if (family.kind() == SmootherFamily::Kind::RidgePath) {
        const Vector& mu = family.ridge_eigensystem().eigenvalues;
        const double floor = mu(0) * 1e-12;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (int j = 0; j < mu.size(); ++j) {
            if (mu(j) <= floor) break;
            const double lx = std::log(static_cast<double>(j + 1));
            const double ly = std::log(mu(j));
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
            ++count;
        }
        if (count >= 2 && sxx * count - sx * sx > 0.0) {
            const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
            rep.decay_alpha = -slope;
            double l1 = std::numeric_limits<double>::infinity(), l2 = 0.0;
            for (int j = 0; j < count; ++j) {
                const double lj = mu(j) * std::pow(static_cast<double>(j + 1), rep.decay_alpha);
                l1 = std::min(l1, lj);
                l2 = std::max(l2, lj);
            }
            rep.decay_l1 = l1;
            rep.decay_l2 = l2;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// kappa under polynomial eigenvalue decay

namespace {

// adaptive Simpson with Richardson correction
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = rel_tol * std::max(std::abs(whole), 1e-30);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double kappa_from_decay(double alpha, double l1, double l2) {
    if (!(alpha > 1.0))
        throw input_error("kappa_from_decay: alpha must exceed 1 (the integrals diverge)");
    if (!(l1 > 0.0) || !(l2 >= l1))
        throw input_error("kappa_from_decay: need L2 >= L1 > 0");
    constexpr double rel_tol = 1e-8;

    // int_0^inf du/(1+u^a): the [1,inf) tail is mapped to [0,1] by u = t^{-1/(a-1)},
    // which makes the integrand smooth
    const double p = 1.0 / (alpha - 1.0);
    const double head = integrate(
        [alpha](double u) { return 1.0 / (1.0 + std::pow(u, alpha)); }, 0.0, 1.0, rel_tol);
    const double tail = integrate(
        [alpha, p](double t) { return p / (1.0 + std::pow(t, p * alpha)); }, 0.0, 1.0,
        rel_tol);
    const double i1 = head + tail;

    // int_1^inf du/(1+u^a)^2 with u = t^{-1/(2a-1)}: again smooth on [0,1]
    const double q = 1.0 / (2.0 * alpha - 1.0);
    const double i2 = integrate(
        [alpha, q](double t) {
            if (t <= 0.0) return q;
            const double w = 1.0 + std::pow(t, q * alpha);
            return q / (w * w);
        },
        0.0, 1.0, rel_tol);

    return std::pow(l2 / l1, 1.0 / alpha) * i1 / i2;
}

}  // namespace minpen
