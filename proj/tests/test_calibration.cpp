#include "minpen/calibration.hpp"

#include "minpen/simulation.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace minpen;
using namespace minpen::test;

namespace {

SmootherFamily nested_projection_family(Rng& rng, int n) {
    const Matrix full = random_orthonormal(rng, n, n);
    std::vector<Matrix> bases;
    for (int k = 0; k <= n; ++k) bases.push_back(full.leftCols(k));
    return SmootherFamily::projection_set(std::move(bases));
}

MinPenPath synthetic_path(const std::vector<double>& cs, const std::vector<double>& dfs) {
    MinPenPath path;
    for (std::size_t i = 0; i < cs.size(); ++i) path.push_back({cs[i], i, dfs[i]});
    return path;
}

}  // namespace

TEST_SUITE_BEGIN("calibration");

TEST_CASE("geometric C-grid invariants") {
    const CGrid grid = CGrid::geometric(1e-3, 10.0, 1.3);
    CHECK(grid.values.size() >= 10);
    CHECK(grid.values.front() == doctest::Approx(1e-3));
    CHECK(grid.values.back() >= 10.0 * (1.0 - 1e-12));
    for (std::size_t i = 0; i + 1 < grid.values.size(); ++i) {
        CHECK(grid.values[i] < grid.values[i + 1]);
        CHECK(grid.values[i + 1] / grid.values[i] == doctest::Approx(1.3).epsilon(1e-12));
    }
    CHECK_THROWS_AS(CGrid::geometric(1.0, 1.2, 1.3), input_error);  // too few points
    CHECK_THROWS_AS(CGrid::geometric(0.0, 1.0, 1.3), input_error);
    CHECK_THROWS_AS(CGrid::geometric(1.0, 2.0, 0.9), input_error);

    Rng rng(3);
    const Vector y = random_vector(rng, 100);
    const CGrid auto_grid = CGrid::default_for(y, 100);
    CHECK(auto_grid.scale == doctest::Approx(std::exp(std::pow(100.0, -0.25))));
}

TEST_CASE("minpen path endpoints") {
    Rng rng(5);
    const int n = 30;
    const auto family = nested_projection_family(rng, n);
    const Vector y = random_vector(rng, n);
    const auto profile = profile_family(family, y, 1);
    const CGrid grid = CGrid::geometric(1e-6, 1e4, 2.0);
    const auto path = minpen_path(profile, grid, 1);
    CHECK(path.front().df == doctest::Approx(n));  // negligible penalty: maximal df
    CHECK(path.back().df == doctest::Approx(0.0)); // dominating penalty: minimal df
}

TEST_CASE("pure-noise projection path drops around sigma^2") {
    Rng rng(7);
    const int n = 50;
    const auto family = nested_projection_family(rng, n);
    Vector y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.normal();  // sigma^2 = 1
    const auto profile = profile_family(family, y, 1);
    const CGrid grid = CGrid::geometric(1e-2, 1e2, std::exp(std::pow(50.0, -0.25)));
    const auto path = minpen_path(profile, grid, 1);
    for (const auto& pt : path) {
        if (pt.c < 0.15) CHECK(pt.df >= 0.8 * n);
        if (pt.c > 6.0) CHECK(pt.df <= 0.15 * n);
    }
}

TEST_CASE("path df is nonincreasing when comparisons are strict") {
    Rng rng(11);
    const int n = 80;
    const auto eig = eigendecompose(build_kernel_matrix(KernelSpec::exponential_product(),
                                                        random_points(rng, n, 3)));
    const auto family = SmootherFamily::ridge_path(eig, default_lambda_grid(eig, n), n);
    const Vector y = random_vector(rng, n);
    const auto profile = profile_family(family, y, 1);
    const auto path = minpen_path(profile, CGrid::geometric(1e-4, 1e2, 1.25), 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (path[i + 1].df > path[i].df + 1e-9) {
            // only permissible if the two candidates tie within 1e-9 at either C
            const auto& a = path[i];
            const auto& b = path[i + 1];
            const double ta = profile.risk_ss[a.lambda_id] +
                              b.c * profile.minpen_factor[a.lambda_id];
            const double tb = profile.risk_ss[b.lambda_id] +
                              b.c * profile.minpen_factor[b.lambda_id];
            CHECK(std::abs(ta - tb) <= 1e-9 * std::max({std::abs(ta), std::abs(tb), 1.0}));
        }
    }
}

TEST_CASE("window rule") {
    // n = 10^4 makes the window the single point df = 1000
    const int n = 10000;
    const auto path = synthetic_path({0.5, 1.0, 2.0}, {5000.0, 1000.0, 50.0});
    const auto est = estimate_variance(path, n, VarianceRule::Window);
    CHECK(est.sigma2_hat == doctest::Approx(1.0));
    CHECK(est.rule_used == VarianceRule::Window);
    CHECK(est.jump_size == doctest::Approx(4000.0));

    // below 10^4 the window is empty: explicit refusal pointing at max-jump
    CHECK_THROWS_WITH_AS(estimate_variance(path, 5000, VarianceRule::Window),
                         doctest::Contains("max-jump"), no_jump_error);

    // window nonempty but skipped over entirely
    const auto skip = synthetic_path({0.5, 1.0}, {9000.0, 10.0});
    CHECK_THROWS_AS(estimate_variance(skip, n, VarianceRule::Window), no_jump_error);
}

TEST_CASE("max-jump rule") {
    const auto path = synthetic_path({0.7, 0.9, 1.1, 1.3}, {450.0, 400.0, 20.0, 10.0});
    const auto est = estimate_variance(path, 500, VarianceRule::MaxJump);
    CHECK(est.sigma2_hat == doctest::Approx(std::sqrt(0.9 * 1.1)));
    CHECK(est.jump_size == doctest::Approx(380.0));
    CHECK(est.local_jumps.size() == 1);  // no other drop exceeds half the maximum

    const auto flat = synthetic_path({0.5, 1.0, 2.0}, {100.0, 100.0, 100.0});
    CHECK_THROWS_WITH_AS(estimate_variance(flat, 500, VarianceRule::MaxJump),
                         doctest::Contains("no jump"), no_jump_error);
}

TEST_CASE("relaxed-window rule") {
    const int n = 1000;  // n^{3/4} ~ 178, n/10 = 100
    // df crosses from above 100 to below 178 around C = 1
    std::vector<double> cs, dfs;
    const double ratio = std::exp(std::pow(1000.0, -0.25));
    double c = 0.05;
    while (c < 20.0) {
        cs.push_back(c);
        dfs.push_back(c < 1.0 ? 600.0 : 40.0);
        c *= ratio;
    }
    const auto est =
        estimate_variance(synthetic_path(cs, dfs), n, VarianceRule::RelaxedWindow, 0.05);
    CHECK(est.rule_used == VarianceRule::RelaxedWindow);
    CHECK(est.sigma2_hat > 0.5);
    CHECK(est.sigma2_hat < 2.0);

    // a path stuck at high df has no admissible C
    const auto stuck = synthetic_path(cs, std::vector<double>(cs.size(), 600.0));
    CHECK_THROWS_AS(estimate_variance(stuck, n, VarianceRule::RelaxedWindow),
                    no_jump_error);
}

TEST_CASE("relaxed-window rule on simulated ridge data") {
    SimConfig sim;
    sim.n = 1000;
    sim.d = 4;
    sim.sigma = 1.0;
    const auto data = generate(sim, 3);
    const Matrix k = build_kernel_matrix(KernelSpec::exponential_product(), data.pts);
    const auto eig = eigendecompose(k);
    const auto family = SmootherFamily::ridge_path(eig, default_lambda_grid(eig, sim.n), sim.n);
    const auto path = minpen_path(family, data.y, sim.cgrid_for(data.y));
    const auto relaxed = estimate_variance(path, sim.n, VarianceRule::RelaxedWindow);
    const auto maxjump = estimate_variance(path, sim.n, VarianceRule::MaxJump);
    CHECK(relaxed.sigma2_hat >= 0.7);
    CHECK(relaxed.sigma2_hat <= 1.4);
    // the midpoint of the admissible interval sits near the max-jump location
    CHECK(std::abs(std::log(relaxed.sigma2_hat / maxjump.sigma2_hat)) < 0.5);
}

TEST_CASE("plug-in selection") {
    Rng rng(13);
    const int n = 40;
    const auto family = nested_projection_family(rng, n);
    const Vector y = random_vector(rng, n);
    const auto profile = profile_family(family, y, 1);

    CHECK(select_with_plugin(profile, 1e12) == 0);  // huge C: smallest df

    // projections + known sigma^2: identical to an independent Mallows Cp route
    const double sigma2 = 1.0;
    std::size_t cp = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < profile.size(); ++k) {
        const double crit = profile.risk_ss[k] + 2.0 * sigma2 * profile.df[k];
        if (crit < best) {
            best = crit;
            cp = k;
        }
    }
    CHECK(select_with_plugin(profile, sigma2) == cp);
}

TEST_CASE("noiseless data with a tiny plug-in keeps the risk near zero") {
    SimConfig sim;
    sim.n = 60;
    sim.d = 2;
    sim.sigma = 0.0;
    const auto data = generate(sim, 21);
    const Matrix k = build_kernel_matrix(KernelSpec::exponential_product(), data.pts);
    const auto eig = eigendecompose(k);
    const auto family = SmootherFamily::ridge_path(eig, default_lambda_grid(eig, sim.n), sim.n);
    const auto profile = profile_family(family, data.y, 1);
    const std::size_t id = select_with_plugin(profile, 1e-12);
    const Vector fitted = family.fit(id, data.y);
    CHECK(true_risk(fitted, data.f) <= 1e-6 * data.f.squaredNorm() / sim.n);
}

TEST_CASE("calibrate end to end on synthetic ridge data") {
    SimConfig sim;
    sim.n = 400;
    sim.d = 6;
    sim.sigma = 1.0;
    const auto data = generate(sim, 2);
    const Matrix k = build_kernel_matrix(KernelSpec::exponential_product(), data.pts);
    const auto eig = eigendecompose(k);
    const auto family = SmootherFamily::ridge_path(eig, default_lambda_grid(eig, sim.n), sim.n);

    const auto res1 = calibrate(family, data.y);
    CHECK(res1.sigma2_hat >= 0.5);
    CHECK(res1.sigma2_hat <= 2.0);
    CHECK(res1.rule_used == VarianceRule::MaxJump);  // auto at n < 10^4
    CHECK(res1.jump_size > 0.0);
    CHECK_FALSE(res1.degenerate_data);
    CHECK(res1.path.size() >= 10);

    // determinism: identical inputs, identical result
    const auto res2 = calibrate(family, data.y);
    CHECK(res1.sigma2_hat == res2.sigma2_hat);
    CHECK(res1.selected_lambda == res2.selected_lambda);
    for (std::size_t i = 0; i < res1.path.size(); ++i)
        CHECK(res1.path[i].lambda_id == res2.path[i].lambda_id);

    // selection never exceeds the df at the shelf above the jump
    double shelf = 0.0;
    for (std::size_t i = 0; i + 1 < res1.path.size(); ++i)
        if (res1.path[i].df - res1.path[i + 1].df == res1.jump_size) shelf = res1.path[i].df;
    CHECK(res1.df_selected <= shelf + 1e-9);
}

TEST_CASE("pure-noise projection calibration selects far below n/10") {
    Rng rng(17);
    const int n = 50;
    const auto family = nested_projection_family(rng, n);
    Vector y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.normal();
    const auto res = calibrate(family, y);
    CHECK(res.df_selected < n / 10.0);
}

TEST_CASE("degenerate constant response") {
    Rng rng(19);
    const int n = 30;
    const auto eig = eigendecompose(build_kernel_matrix(KernelSpec::exponential_product(),
                                                        random_points(rng, n, 2)));
    const auto family = SmootherFamily::ridge_path(eig, default_lambda_grid(eig, n), n);
    const auto res = calibrate(family, Vector::Constant(n, 4.2));
    CHECK(res.degenerate_data);
    CHECK(res.sigma2_hat == 0.0);
}

TEST_CASE("scaling equivariance under y -> 2y with a 4x grid") {
    Rng rng(23);
    const int n = 60;
    const auto eig = eigendecompose(build_kernel_matrix(KernelSpec::exponential_product(),
                                                        random_points(rng, n, 3)));
    const auto family = SmootherFamily::ridge_path(eig, default_lambda_grid(eig, n), n);
    const Vector y = random_vector(rng, n);
    const Vector y2 = 2.0 * y;

    CalibrationConfig cfg1;
    cfg1.grid = CGrid::geometric(1e-3, 1e2, 1.25);
    CalibrationConfig cfg2 = cfg1;
    for (double& c : cfg2.grid->values) c *= 4.0;  // exact in binary

    const auto r1 = calibrate(family, y, cfg1);
    const auto r2 = calibrate(family, y2, cfg2);
    CHECK(r2.sigma2_hat == doctest::Approx(4.0 * r1.sigma2_hat).epsilon(1e-15));
    CHECK(r1.selected_lambda == r2.selected_lambda);
    for (std::size_t i = 0; i < r1.path.size(); ++i)
        CHECK(r1.path[i].lambda_id == r2.path[i].lambda_id);
}

TEST_CASE("half-ideal penalty equals the minimal penalty on projection families") {
    Rng rng(29);
    const int n = 25;
    const auto family = nested_projection_family(rng, n);
    const Vector y = random_vector(rng, n);
    const auto profile = profile_family(family, y, 1);
    for (double c : {0.05, 0.2, 1.0, 3.0}) {
        // tr_ata = df makes both penalties C * df exactly
        CHECK(argmin_profile(profile, PenaltyRule::minimal(c), n) ==
              argmin_profile(profile, PenaltyRule::ideal(0.5 * c), n));
    }
}

TEST_CASE("assumption checks") {
    {
        // projections: tr_ata = df so kappa_hat <= 1
        Rng rng(31);
        const int n = 36;
        const auto family = nested_projection_family(rng, n);
        const Vector f = random_vector(rng, n);
        const auto rep = check_assumptions(family, f, 1.0);
        CHECK(rep.kappa_hat <= 1.0 + 1e-12);
        CHECK(rep.a1_ok);  // the full projection has zero bias and df = n
    }
    {
        // flat spectrum: kappa_hat <= 1 + n lambda_max / c in closed form
        const int n = 12;
        const double c = 2.0;
        Eigensystem eig;
        eig.eigenvalues = Vector::Constant(n, c);
        eig.eigenvectors = Matrix::Identity(n, n);
        const std::vector<double> lambdas = {0.01, 0.1, 0.5};
        const auto family = SmootherFamily::ridge_path(eig, lambdas, n);
        const auto rep = check_assumptions(family, Vector::Zero(n), 1.0);
        CHECK(rep.kappa_hat <= 1.0 + n * 0.5 / c + 1e-9);
        CHECK(rep.kappa_hat ==
              doctest::Approx(1.0 + n * 0.5 / c));  // max at the largest lambda, zero bias
        // A2 holds iff the largest lambda pushes df under sqrt(n)
        const double df_last = ridge_stats(eig, 0.5, n).df;
        CHECK(rep.a2_ok == (df_last <= std::sqrt(static_cast<double>(n))));
    }
}

TEST_CASE("kappa under polynomial eigenvalue decay") {
    // alpha = 2 closed form via arctan antiderivatives:
    // int_0^inf du/(1+u^2) = pi/2, int_1^inf du/(1+u^2)^2 = pi/8 - 1/4... plus
    // the evaluation at 1: (1/2)(u/(1+u^2) + arctan u)
    const double pi = 3.14159265358979323846;
    const double expect = (pi / 2.0) / (pi / 4.0 - 0.5 * (0.5 + pi / 4.0));
    CHECK(kappa_from_decay(2.0, 1.0, 1.0) == doctest::Approx(expect).epsilon(1e-8));
    CHECK(kappa_from_decay(2.0, 0.3, 0.3) ==
          doctest::Approx(expect).epsilon(1e-8));  // independent of L at L1 = L2

    // increasing in L2/L1 for fixed alpha
    CHECK(kappa_from_decay(2.0, 1.0, 2.0) > kappa_from_decay(2.0, 1.0, 1.0));
    CHECK(kappa_from_decay(2.0, 1.0, 4.0) > kappa_from_decay(2.0, 1.0, 2.0));

    CHECK_THROWS_AS(kappa_from_decay(1.0, 1.0, 1.0), input_error);
    CHECK_THROWS_AS(kappa_from_decay(2.0, 2.0, 1.0), input_error);
}

TEST_SUITE_END();
