// Acceptance suite: end-to-end checks of the calibration library at desk scale.
// Each criterion prints one PASS/FAIL line; the process exits nonzero if any fail.

#include "minpen/io.hpp"
#include "minpen/simd.hpp"
#include "minpen/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace minpen;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const char* title, bool pass, const std::string& detail) {
    std::printf("[%s] %2d. %-28s %s\n", pass ? "PASS" : "FAIL", number, title,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct RidgeSetup {
    SyntheticDataset data;
    Matrix kernel;
    SmootherFamily family;
    FamilyProfile profile;
};

RidgeSetup make_ridge_setup(const SimConfig& sim, std::uint64_t seed) {
    SyntheticDataset data = generate(sim, seed);
    Matrix k = build_kernel_matrix(KernelSpec::from_name(sim.kernel), data.pts);
    Eigensystem eig = eigendecompose(k);
    auto lambdas = default_lambda_grid(eig, sim.n, sim.lambda_grid_size);
    SmootherFamily family = SmootherFamily::ridge_path(std::move(eig), lambdas, sim.n);
    FamilyProfile profile = profile_family(family, data.y, sim.threads);
    return {std::move(data), std::move(k), std::move(family), std::move(profile)};
}

// --------------------------------------------------------------------------
// 1. jump reproduction: n=500, d=6, sigma^2=1, 10 seeds. In >= 8/10 seeds the
//    largest consecutive df drop of the minimal-penalty path is >= n/4 and sits
//    at |ln(C*/sigma^2)| <= 0.7; the half-ideal curve's largest drop is <= 1/3
//    of it in those seeds. Wall time <= 3 min.
void criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    SimConfig sim;
    sim.n = 500;
    sim.d = 6;
    sim.sigma = 1.0;
    int good = 0;
    std::ostringstream detail;
    for (int seed = 0; seed < 10; ++seed) {
        JumpConfig jc;
        jc.sim = sim;
        jc.sim.seed = static_cast<std::uint64_t>(seed);
        const auto res = run_jump_experiment(jc);
        const auto& rows = res.curves[0];
        double drop_min = 0.0, drop_half = 0.0, at_log_c = 0.0;
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            const double d_min = rows[i].df_minpen - rows[i + 1].df_minpen;
            if (d_min > drop_min) {
                drop_min = d_min;
                at_log_c = 0.5 * (rows[i].log_c_over_sigma2 + rows[i + 1].log_c_over_sigma2);
            }
            drop_half = std::max(drop_half,
                                 rows[i].df_half_ideal - rows[i + 1].df_half_ideal);
        }
        const bool ok = drop_min >= sim.n / 4.0 && std::abs(at_log_c) <= 0.7 &&
                        drop_half <= drop_min / 3.0;
        if (ok) ++good;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail << good << "/10 seeds (drop >= 125, |ln C*| <= 0.7, half <= 1/3), " << secs
           << " s";
    report(1, "jump reproduction", good >= 8 && secs <= 180.0, detail.str());
}

// --------------------------------------------------------------------------
// 2. variance estimation: median sigma2_hat/sigma^2 in [0.8, 1.25] at n=500 and
//    in [0.9, 1.15] at n=2000, 20 replications each.
void criterion_2() {
    std::ostringstream detail;
    bool pass = true;
    for (const auto& [n, lo, hi] :
         std::vector<std::tuple<int, double, double>>{{500, 0.8, 1.25}, {2000, 0.9, 1.15}}) {
        SimConfig sim;
        sim.n = n;
        sim.d = 4;
        sim.sigma = 1.0;
        std::vector<double> ratios;
        for (int rep = 0; rep < 20; ++rep) {
            const auto setup = make_ridge_setup(sim, derive_seed(100, static_cast<std::uint64_t>(rep)));
            CalibrationConfig cal;
            cal.grid = sim.cgrid_for(setup.data.y);
            const auto res = calibrate(setup.family, setup.data.y, cal);
            ratios.push_back(res.sigma2_hat / setup.data.sigma2);
        }
        const double med = median(ratios);
        pass = pass && med >= lo && med <= hi;
        detail << "n=" << n << " median=" << med << " (want [" << lo << "," << hi << "]) ";
    }
    report(2, "variance estimation", pass, detail.str());
}

// --------------------------------------------------------------------------
// 3. oracle ratio: same protocol at n=500, 20 reps. Median risk ratio <= 2.0
//    and the mean within 1.1x of the better of GCV and 10-fold CV.
void criterion_3() {
    SimConfig sim;
    sim.n = 500;
    sim.d = 4;
    sim.sigma = 1.0;
    std::vector<double> minpen_r, gcv_r, cv_r;
    for (int rep = 0; rep < 20; ++rep) {
        const std::uint64_t seed = derive_seed(100, static_cast<std::uint64_t>(rep));
        const auto setup = make_ridge_setup(sim, seed);
        const auto risks = true_risk_profile(setup.family, setup.data.f, setup.data.y);
        const double oracle = *std::min_element(risks.begin(), risks.end());

        CalibrationConfig cal;
        cal.grid = sim.cgrid_for(setup.data.y);
        const auto res = calibrate(setup.family, setup.data.y, cal);
        minpen_r.push_back(risks[res.selected_lambda] / oracle);

        gcv_r.push_back(risks[argmin_profile(setup.profile, PenaltyRule::gcv(), sim.n)] /
                        oracle);

        const auto scores = kfold_cv_scores(setup.family, {{setup.kernel}, setup.data.y}, 10,
                                            seed, sim.threads);
        std::size_t id = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
            if (scores[i] < scores[id]) id = i;
        cv_r.push_back(risks[id] / oracle);
    }
    const double med = median(minpen_r);
    const double better = std::min(mean(gcv_r), mean(cv_r));
    const bool pass = med <= 2.0 && mean(minpen_r) <= 1.1 * better;
    std::ostringstream detail;
    detail << "median=" << med << " mean=" << mean(minpen_r) << " gcv=" << mean(gcv_r)
           << " cv10=" << mean(cv_r) << " bound=" << 1.1 * better;
    report(3, "oracle ratio", pass, detail.str());
}

// --------------------------------------------------------------------------
// 4. slope-ratio property: ideal/minimal in (1, 2] for every ridge member with
//    df > 1e-6; exactly 2 (within 1e-12) for projection members.
void criterion_4() {
    bool pass = true;
    std::ostringstream detail;
    SimConfig sim;
    sim.n = 100;
    sim.d = 3;
    const auto setup = make_ridge_setup(sim, 41);
    double worst_lo = 2.0, worst_hi = 0.0;
    for (std::size_t i = 0; i < setup.family.size(); ++i) {
        const auto st = setup.family.stats(i);
        if (st.df <= 1e-6) continue;
        const double ratio = ideal_penalty(st, 1.0) / minimal_penalty(st, 1.0);
        worst_lo = std::min(worst_lo, ratio);
        worst_hi = std::max(worst_hi, ratio);
        pass = pass && ratio > 1.0 && ratio <= 2.0 + 1e-12;
    }
    detail << "ridge ratios in [" << worst_lo << ", " << worst_hi << "]";

    Rng rng(43);
    Matrix gauss(20, 20);
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) gauss(i, j) = rng.normal();
    const Matrix q = Eigen::HouseholderQR<Matrix>(gauss).householderQ() * Matrix::Identity(20, 20);
    std::vector<Matrix> bases;
    for (int k = 1; k <= 20; ++k) bases.push_back(q.leftCols(k));
    const auto proj = SmootherFamily::projection_set(bases);
    for (std::size_t i = 0; i < proj.size(); ++i) {
        const auto st = proj.stats(i);
        const double ratio = ideal_penalty(st, 1.0) / minimal_penalty(st, 1.0);
        pass = pass && std::abs(ratio - 2.0) <= 1e-12;
    }
    detail << "; projection ratios == 2";
    report(4, "slope-ratio property", pass, detail.str());
}

// --------------------------------------------------------------------------
// 5. eigenbasis vs dense: df, tr_ata and fitted values agree within 1e-8
//    relative on 20 random instances with n <= 50.
void criterion_5() {
    bool pass = true;
    double worst = 0.0;
    Rng rng(47);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 10 + static_cast<int>(rng.integer(41));
        Matrix pts(n, 2);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 2; ++j) pts(i, j) = rng.normal();
        const Matrix k =
            build_kernel_matrix(KernelSpec::exponential_product(), PointSet(pts));
        const auto eig = eigendecompose(k);
        Vector y(n);
        for (int i = 0; i < n; ++i) y(i) = rng.normal();
        for (double nlam : {0.01, 1.0, 50.0}) {
            const double lambda = nlam / n;
            const Matrix reg = k + nlam * Matrix::Identity(n, n);
            const Matrix a = reg.transpose().partialPivLu().solve(k.transpose()).transpose();
            const auto st = ridge_stats(eig, lambda, n);
            const Vector fit = ridge_fit(eig, lambda, y);
            const Vector dense_fit = a * y;
            const double e1 = std::abs(st.df - a.trace()) / std::max(1.0, a.trace());
            const double tr2 = (a.transpose() * a).trace();
            const double e2 = std::abs(st.tr_ata - tr2) / std::max(1.0, tr2);
            const double e3 = (fit - dense_fit).norm() / std::max(1.0, dense_fit.norm());
            worst = std::max({worst, e1, e2, e3});
            pass = pass && e1 <= 1e-8 && e2 <= 1e-8 && e3 <= 1e-8;
        }
    }
    std::ostringstream detail;
    detail << "worst relative deviation " << worst;
    report(5, "eigenbasis vs dense oracle", pass, detail.str());
}

// --------------------------------------------------------------------------
// 6. algebraic risk identities on every member of a 100-member family, 5 seeds,
//    within 1e-9 relative.
void criterion_6() {
    bool pass = true;
    double worst = 0.0;
    for (int seed = 0; seed < 5; ++seed) {
        SimConfig sim;
        sim.n = 100;
        sim.d = 3;
        sim.lambda_grid_size = 100;
        const auto data = generate(sim, derive_seed(300, static_cast<std::uint64_t>(seed)));
        const Matrix k = build_kernel_matrix(KernelSpec::exponential_product(), data.pts);
        const auto eig = eigendecompose(k);
        const auto lambdas = default_lambda_grid(eig, sim.n, 100);
        const Matrix identity = Matrix::Identity(sim.n, sim.n);
        for (double lambda : lambdas) {
            const Matrix reg = k + sim.n * lambda * identity;
            const Matrix a = reg.transpose().partialPivLu().solve(k.transpose()).transpose();
            const Vector fhat = a * data.y;
            const Vector af = a * data.f, aeps = a * data.eps;

            const double lhs1 = (fhat - data.f).squaredNorm();
            const double rhs1 = (af - data.f).squaredNorm() + aeps.squaredNorm() +
                                2.0 * aeps.dot(af - data.f);
            const double scale1 = std::max({lhs1, aeps.squaredNorm(), 1.0});
            const double e1 = std::abs(lhs1 - rhs1) / scale1;

            const double lhs2 = (fhat - data.y).squaredNorm();
            const double rhs2 = lhs1 + data.eps.squaredNorm() -
                                2.0 * data.eps.dot(aeps) +
                                2.0 * data.eps.dot(data.f - af);
            const double scale2 = std::max({lhs2, data.eps.squaredNorm(), 1.0});
            const double e2 = std::abs(lhs2 - rhs2) / scale2;

            worst = std::max({worst, e1, e2});
            pass = pass && e1 <= 1e-9 && e2 <= 1e-9;
        }
    }
    std::ostringstream detail;
    detail << "worst relative defect " << worst;
    report(6, "risk decomposition identities", pass, detail.str());
}

// --------------------------------------------------------------------------
// 7. concentration diagnostics at 10^5 trials: empirical violation rates below
//    2 e^{-x} + 3 Monte-Carlo standard errors for x in {1,2,4}, both bounds,
//    theta in {0.1, 0.5, 1, 2}.
void criterion_7() {
    DiagnoseConfig dc;
    dc.dim = 50;
    dc.trials = 100000;
    dc.seed = 53;
    const auto rows = concentration_diagnostics(dc);
    bool pass = true;
    double worst_margin = 1e9;
    for (const auto& row : rows) {
        const double guard =
            row.bound_value + 3.0 * std::sqrt(row.bound_value / static_cast<double>(row.trials));
        worst_margin = std::min(worst_margin, guard - row.rate);
        pass = pass && row.rate <= guard;
    }
    std::ostringstream detail;
    detail << rows.size() << " bound cells, smallest margin " << worst_margin;
    report(7, "concentration diagnostics", pass, detail.str());
}

// --------------------------------------------------------------------------
// 8. multiple-kernel consistency: eta = e_j reproduces single-kernel ridge
//    within 1e-10, and the analytic eta-gradient matches central finite
//    differences within 1e-5 relative on 10 random 2-kernel instances.
void criterion_8() {
    bool pass = true;
    double worst_fit = 0.0, worst_grad = 0.0;
    Rng rng(59);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 30;
        Matrix x1(n, n), x2(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                x1(i, j) = rng.normal();
                x2(i, j) = rng.normal();
            }
        const std::vector<Matrix> kernels = {Matrix(x1 * x1.transpose() / n),
                                             Matrix(x2 * x2.transpose() / n)};
        Vector y(n);
        for (int i = 0; i < n; ++i) y(i) = rng.normal();
        const std::vector<double> lambdas = {0.02, 0.2};
        std::vector<Vector> etas(2, Vector(2));
        etas[0] << 1.0, 0.0;
        etas[1] << 0.0, 1.0;
        const auto family = SmootherFamily::mkl_grid(kernels, etas, lambdas);
        for (std::size_t j = 0; j < 2; ++j) {
            const auto single = eigendecompose(kernels[j]);
            for (std::size_t li = 0; li < lambdas.size(); ++li) {
                const Vector a = family.fit(j * lambdas.size() + li, y);
                const Vector b = ridge_fit(single, lambdas[li], y);
                const double err = (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.norm());
                worst_fit = std::max(worst_fit, err);
                pass = pass && err <= 1e-10;
            }
        }

        Vector eta(2);
        eta << 0.5 + rng.uniform(), 0.5 + rng.uniform();
        const double lambda = 0.1 / n, c = 1.0;
        const Vector grad = mkl_criterion_gradient(kernels, eta, lambda, y, c);
        for (int j = 0; j < 2; ++j) {
            const double h = 1e-5 * (std::abs(eta(j)) + 1.0);
            Vector up = eta, dn = eta;
            up(j) += h;
            dn(j) -= h;
            const double fd = (mkl_criterion(kernels, up, lambda, y, c).total -
                               mkl_criterion(kernels, dn, lambda, y, c).total) /
                              (2.0 * h);
            const double err = std::abs(grad(j) - fd) / std::max(1.0, std::abs(fd));
            worst_grad = std::max(worst_grad, err);
            pass = pass && err <= 1e-5;
        }
    }
    std::ostringstream detail;
    detail << "worst fit deviation " << worst_fit << ", worst gradient deviation "
           << worst_grad;
    report(8, "multiple-kernel consistency", pass, detail.str());
}

// --------------------------------------------------------------------------
// 9. kappa bound: kappa(alpha=2, L1=L2) equals the closed form
//    (pi/2) / (pi/8 - 1/4) within 1e-3.
void criterion_9() {
    const double pi = 3.14159265358979323846;
    const double expect = (pi / 2.0) / (pi / 8.0 - 0.25);
    const double got = kappa_from_decay(2.0, 1.0, 1.0);
    std::ostringstream detail;
    detail << "kappa = " << got << ", closed form " << expect;
    report(9, "kappa closed form", std::abs(got - expect) <= 1e-3, detail.str());
}

// --------------------------------------------------------------------------
// 10. determinism: each experiment command re-run with the same seed and the
//     thread count varied produces byte-identical CSVs.
std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_10() {
    const fs::path root = fs::temp_directory_path() / "minpen_acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "sim.json");
        cfg << "{\"n\":100,\"d\":3,\"seed\":17}\n";
    }
    {
        std::ofstream cfg(root / "cmp.json");
        cfg << "{\"n\":100,\"d\":3,\"seed\":17,\"replications\":2,\"cv_folds\":3,"
               "\"n_list\":[100]}\n";
    }
    {
        std::ofstream cfg(root / "diag.json");
        cfg << "{\"trials\":20000,\"dim\":30,\"seed\":17}\n";
    }
    struct Job {
        const char* command;
        const char* config;
        std::vector<const char*> files;
    };
    const std::vector<Job> jobs = {
        {"jump", "sim.json", {"jump_single.csv"}},
        {"compare", "cmp.json", {"comparison.csv", "records.csv"}},
        {"diagnose", "diag.json", {"diagnostics.csv"}},
        {"curves", "sim.json", {"curves.csv"}},
    };
    bool pass = true;
    std::ostringstream detail;
    for (const auto& job : jobs) {
        const fs::path out1 = root / (std::string(job.command) + "_t1");
        const fs::path out3 = root / (std::string(job.command) + "_t3");
        for (const auto& [out, threads] : {std::pair{out1, 1}, std::pair{out3, 3}}) {
            std::ostringstream cmd;
            cmd << MINPEN_CLI_PATH << " " << job.command << " --config "
                << (root / job.config).string() << " --out " << out.string() << " --threads "
                << threads << " > /dev/null 2>&1";
            if (std::system(cmd.str().c_str()) != 0) {
                pass = false;
                detail << job.command << ": nonzero exit; ";
            }
        }
        for (const char* file : job.files) {
            const std::string a = slurp(out1 / file);
            const std::string b = slurp(out3 / file);
            if (a.empty() || a != b) {
                pass = false;
                detail << job.command << "/" << file << " differs; ";
            }
        }
    }
    if (pass) detail << "jump/compare/diagnose/curves byte-identical at 1 vs 3 threads";
    report(10, "thread-count determinism", pass, detail.str());
}

}  // namespace

int main() {
    std::printf("acceptance suite (simd backend: %s)\n", simd::active().name);
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (g_failures == 0) {
        std::printf("all 10 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
