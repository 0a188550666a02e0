// minpen command-line tool: minimal-penalty calibration on CSV data plus the
// simulation experiments (jump curves, method comparison, concentration
// diagnostics, bias-variance curves).

#include "minpen/io.hpp"
#include "minpen/simd.hpp"
#include "minpen/simulation.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace minpen;

namespace {

constexpr const char* kVersion = "0.1.0";

int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file " + path);
    json j = json::parse(in);  // parse errors propagate as exit code 2
    if (!j.is_object()) throw input_error("config must be a JSON object");
    return j;
}

void reject_unknown_keys(const json& config, const std::set<std::string>& allowed) {
    for (const auto& item : config.items()) {
        if (!allowed.count(item.key()))
            throw input_error("unknown config key '" + item.key() + "'");
    }
}

template <typename T>
T get_or(const json& config, const std::string& key, T fallback) {
    if (!config.contains(key)) return fallback;
    try {
        return config.at(key).get<T>();
    } catch (const json::exception&) {
        throw input_error("config key '" + key + "' has the wrong type");
    }
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed = -1;  // -1: not given on the command line
    int threads = 0;         // 0: not given
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed, "random seed (overrides the config)");
    cmd->add_option("--threads", flags.threads, "worker threads (overrides the config)");
}

const std::set<std::string> kSimKeys = {
    "n", "d", "m", "sigma", "kernel", "seed", "replications", "lambda_grid_size",
    "cgrid_lo_factor", "cgrid_hi_factor", "cgrid_ratio", "threads"};

SimConfig sim_from_config(const json& config, const CommonFlags& flags, bool need_seed) {
    SimConfig sim;
    sim.n = get_or(config, "n", sim.n);
    sim.d = get_or(config, "d", sim.d);
    sim.m = get_or(config, "m", sim.m);
    sim.sigma = get_or(config, "sigma", sim.sigma);
    sim.kernel = get_or(config, "kernel", sim.kernel);
    sim.replications = get_or(config, "replications", sim.replications);
    sim.lambda_grid_size =
        get_or(config, "lambda_grid_size", static_cast<std::int64_t>(0)) > 0
            ? static_cast<std::size_t>(config.at("lambda_grid_size").get<std::int64_t>())
            : 0;
    sim.cgrid_lo_factor = get_or(config, "cgrid_lo_factor", sim.cgrid_lo_factor);
    sim.cgrid_hi_factor = get_or(config, "cgrid_hi_factor", sim.cgrid_hi_factor);
    sim.cgrid_ratio = get_or(config, "cgrid_ratio", sim.cgrid_ratio);

    if (flags.seed >= 0) sim.seed = static_cast<std::uint64_t>(flags.seed);
    else if (config.contains("seed")) sim.seed = config.at("seed").get<std::uint64_t>();
    else if (need_seed)
        throw input_error("a seed is required (set --seed or the config key 'seed')");

    if (flags.threads > 0) sim.threads = flags.threads;
    else sim.threads = get_or(config, "threads", default_threads());
    return sim;
}

json sim_to_json(const SimConfig& sim) {
    return json{{"n", sim.n},
                {"d", sim.d},
                {"m", sim.m},
                {"sigma", sim.sigma},
                {"kernel", sim.kernel},
                {"seed", sim.seed},
                {"replications", sim.replications},
                {"lambda_grid_size", sim.lambda_grid_size},
                {"cgrid_lo_factor", sim.cgrid_lo_factor},
                {"cgrid_hi_factor", sim.cgrid_hi_factor},
                {"cgrid_ratio", sim.cgrid_ratio},
                {"threads", sim.threads}};
}

void write_manifest(const fs::path& out_dir, const std::string& command, json config_echo,
                    std::vector<std::string> outputs) {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    json manifest{{"command", command},
                  {"version", kVersion},
                  {"timestamp", stamp},
                  {"config", std::move(config_echo)},
                  {"outputs", std::move(outputs)}};
    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw input_error("cannot write manifest.json in " + out_dir.string());
    out << manifest.dump(2) << "\n";
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw input_error("output directory " + dir.string() + " is not writable");
}

// ---------------------------------------------------------------------------

int cmd_calibrate(const CommonFlags& flags, const std::string& data_path) {
    const json config = load_config(flags.config_path);
    reject_unknown_keys(config,
                        {"kernel", "kernel_matrix", "rule", "xi", "lambda_grid_size",
                         "cgrid_lo_factor", "cgrid_hi_factor", "cgrid_ratio", "threads",
                         "seed", "sigma2_known"});
    const fs::path out_dir(flags.out_dir);
    ensure_out_dir(out_dir);

    const DataCsv data = read_data_csv(data_path);
    const int n = data.pts.n();
    if (n < 10) throw input_error("calibrate: need at least 10 observations");

    const std::string kernel_name = get_or<std::string>(config, "kernel", "exponential-product");
    KernelSpec spec = [&] {
        if (kernel_name == "precomputed") {
            const std::string mpath = get_or<std::string>(config, "kernel_matrix", "");
            if (mpath.empty())
                throw input_error("kernel 'precomputed' needs the config key 'kernel_matrix'");
            return KernelSpec::precomputed(read_matrix_csv(mpath));
        }
        return KernelSpec::from_name(kernel_name);
    }();

    const int threads = flags.threads > 0 ? flags.threads
                                          : get_or(config, "threads", default_threads());
    const auto rule =
        variance_rule_from_name(get_or<std::string>(config, "rule", "auto"));
    const double xi = get_or(config, "xi", 0.05);
    const auto grid_size = static_cast<std::size_t>(
        get_or(config, "lambda_grid_size", static_cast<std::int64_t>(0)));
    // when the caller knows the noise variance (synthetic data), the path CSV
    // gains a log10(C/sigma2) column for direct jump plots
    std::optional<double> sigma2_known;
    if (config.contains("sigma2_known")) sigma2_known = config.at("sigma2_known").get<double>();

    const Matrix k = build_kernel_matrix(spec, data.pts);
    Eigensystem eig = eigendecompose(k);
    const auto lambdas = default_lambda_grid(eig, n, grid_size);
    const auto family = SmootherFamily::ridge_path(std::move(eig), lambdas, n);

    CalibrationConfig cal;
    cal.rule = rule;
    cal.xi = xi;
    cal.threads = threads;
    const double mean = data.y.mean();
    const double vhat = (data.y.array() - mean).square().sum() / std::max(n - 1, 1);
    const double yscale = std::max(1.0, data.y.cwiseAbs().maxCoeff());
    const bool degenerate = !(vhat > 1e-15 * yscale * yscale);
    if (!degenerate) {
        const double ratio = get_or(config, "cgrid_ratio", 0.0);
        cal.grid = CGrid::geometric(get_or(config, "cgrid_lo_factor", 1e-4) * vhat,
                                    get_or(config, "cgrid_hi_factor", 10.0) * vhat,
                                    ratio > 0.0 ? ratio : default_cgrid_ratio(n));
    }

    json config_echo{{"kernel", kernel_name},
                     {"rule", variance_rule_name(rule)},
                     {"xi", xi},
                     {"lambda_grid_size", grid_size == 0 ? std::max(n, 100)
                                                         : static_cast<int>(grid_size)},
                     {"threads", threads},
                     {"data", data_path},
                     {"n", n},
                     {"d", data.pts.d()}};

    MinPenPath diagnostic;
    CalibrationResult result;
    try {
        result = calibrate(family, data.y, cal, &diagnostic);
    } catch (const no_jump_error&) {
        write_path_csv(out_dir / "path.csv", diagnostic, sigma2_known);
        write_manifest(out_dir, "calibrate", config_echo, {"path.csv"});
        throw;
    }

    if (result.degenerate_data)
        std::cerr << "warning: response has (numerically) zero variance; "
                     "sigma2_hat set to 0 (degenerate data)\n";

    std::ofstream cal_out(out_dir / "calibration.json");
    cal_out << calibration_to_json(result).dump(2) << "\n";
    write_path_csv(out_dir / "path.csv", result.path, sigma2_known);

    const Vector fitted = family.fit(result.selected_lambda, data.y);
    std::vector<std::vector<Cell>> fitted_rows;
    for (int i = 0; i < n; ++i) fitted_rows.push_back({Cell(fitted(i))});
    write_csv(out_dir / "fitted.csv", {"fitted"}, fitted_rows);

    write_manifest(out_dir, "calibrate", config_echo,
                   {"calibration.json", "path.csv", "fitted.csv"});
    std::printf("sigma2_hat=%s rule=%s df_selected=%s (n=%d)\n",
                format_full(result.sigma2_hat).c_str(), variance_rule_name(result.rule_used),
                format_full(result.df_selected).c_str(), n);
    return 0;
}

int cmd_jump(const CommonFlags& flags) {
    const json config = load_config(flags.config_path);
    auto allowed = kSimKeys;
    allowed.insert("variant");
    allowed.insert("eta_grid_size");
    allowed.insert("gradient_max_iters");
    reject_unknown_keys(config, allowed);

    JumpConfig jc;
    jc.sim = sim_from_config(config, flags, /*need_seed=*/true);
    jc.variant = get_or<std::string>(config, "variant", "single");
    jc.eta_grid_size = static_cast<std::size_t>(
        get_or(config, "eta_grid_size", static_cast<std::int64_t>(11)));
    jc.gradient_max_iters = get_or(config, "gradient_max_iters", 60);
    if (jc.variant == "mkl" && !config.contains("d")) jc.sim.d = 8;  // two 4-d blocks

    const fs::path out_dir(flags.out_dir);
    ensure_out_dir(out_dir);
    const JumpResult result = run_jump_experiment(jc);

    std::vector<std::string> outputs;
    for (std::size_t c = 0; c < result.curves.size(); ++c) {
        std::string name = "jump_" + result.curve_names[c] + ".csv";
        for (auto& ch : name)
            if (ch == '-') ch = '_';
        std::vector<std::vector<Cell>> rows;
        for (const auto& r : result.curves[c])
            rows.push_back({Cell(r.log_c_over_sigma2), Cell(r.df_minpen), Cell(r.df_half_ideal)});
        write_csv(out_dir / name, {"log_C_over_sigma2", "df_minpen", "df_half_ideal"}, rows);
        outputs.push_back(name);
    }

    json echo = sim_to_json(jc.sim);
    echo["variant"] = jc.variant;
    echo["eta_grid_size"] = jc.eta_grid_size;
    echo["gradient_max_iters"] = jc.gradient_max_iters;
    write_manifest(out_dir, "jump", echo, outputs);
    return 0;
}

int cmd_compare(const CommonFlags& flags, const std::vector<std::string>& method_flags) {
    const json config = load_config(flags.config_path);
    auto allowed = kSimKeys;
    allowed.insert("n_list");
    allowed.insert("methods");
    allowed.insert("variant");
    allowed.insert("cv_folds");
    allowed.insert("eta_grid_size");
    reject_unknown_keys(config, allowed);

    CompareConfig cc;
    cc.sim = sim_from_config(config, flags, /*need_seed=*/true);
    if (!config.contains("d")) cc.sim.d = 4;
    if (config.contains("n_list")) cc.n_list = config.at("n_list").get<std::vector<int>>();
    cc.variant = get_or<std::string>(config, "variant", "single");
    cc.cv_folds = get_or(config, "cv_folds", 10);
    cc.eta_grid_size = static_cast<std::size_t>(
        get_or(config, "eta_grid_size", static_cast<std::int64_t>(6)));
    std::vector<std::string> method_names = method_flags;
    if (method_names.empty() && config.contains("methods"))
        method_names = config.at("methods").get<std::vector<std::string>>();
    for (const auto& name : method_names) cc.methods.push_back(method_from_name(name));

    const fs::path out_dir(flags.out_dir);
    ensure_out_dir(out_dir);
    const CompareResult result = run_comparison_experiment(cc);

    std::vector<std::vector<Cell>> table;
    for (const auto& cell : result.cells)
        table.push_back({Cell(static_cast<long>(cell.n)), Cell(std::string(method_name(cell.method))),
                         Cell(cell.mean_ratio), Cell(cell.se_ratio),
                         Cell(static_cast<long>(cell.failures)),
                         Cell(static_cast<long>(cell.used))});
    write_csv(out_dir / "comparison.csv",
              {"n", "method", "mean_ratio", "se_ratio", "failures", "replications_used"},
              table);

    std::vector<std::vector<Cell>> recs;
    for (const auto& r : result.records)
        recs.push_back({Cell(static_cast<long>(r.n)), Cell(static_cast<long>(r.rep)),
                        Cell(static_cast<long>(r.seed)), Cell(std::string(method_name(r.method))),
                        Cell(r.selected), Cell(r.risk), Cell(r.reference_risk),
                        Cell(r.sigma2_hat), Cell(static_cast<long>(r.failed ? 1 : 0))});
    write_csv(out_dir / "records.csv",
              {"n", "rep", "seed", "method", "selected", "risk", "reference_risk",
               "sigma2_hat", "failed"},
              recs);

    json echo = sim_to_json(cc.sim);
    echo["n_list"] = cc.n_list;
    echo["variant"] = cc.variant;
    // the denominator of every reported risk ratio
    echo["reference"] =
        cc.variant == "single" ? "oracle" : "mallows-known-sigma2 on the (eta,lambda) grid";
    echo["cv_folds"] = cc.cv_folds;
    echo["eta_grid_size"] = cc.eta_grid_size;
    json methods = json::array();
    for (Method m : cc.methods.empty() ? default_compare_methods(cc.variant) : cc.methods)
        methods.push_back(method_name(m));
    echo["methods"] = methods;
    write_manifest(out_dir, "compare", echo, {"comparison.csv", "records.csv"});
    return 0;
}

int cmd_diagnose(const CommonFlags& flags, long trials_flag) {
    const json config = load_config(flags.config_path);
    reject_unknown_keys(config,
                        {"dim", "trials", "x_values", "theta_values", "seed", "threads"});

    DiagnoseConfig dc;
    dc.dim = get_or(config, "dim", dc.dim);
    dc.trials = trials_flag > 0 ? trials_flag : get_or(config, "trials", dc.trials);
    if (config.contains("x_values"))
        dc.x_values = config.at("x_values").get<std::vector<double>>();
    if (config.contains("theta_values"))
        dc.theta_values = config.at("theta_values").get<std::vector<double>>();
    if (flags.seed >= 0) dc.seed = static_cast<std::uint64_t>(flags.seed);
    else if (config.contains("seed")) dc.seed = config.at("seed").get<std::uint64_t>();
    else throw input_error("a seed is required (set --seed or the config key 'seed')");
    dc.threads = flags.threads > 0 ? flags.threads : get_or(config, "threads", default_threads());

    const fs::path out_dir(flags.out_dir);
    ensure_out_dir(out_dir);
    const auto rows = concentration_diagnostics(dc);

    std::vector<std::vector<Cell>> table;
    for (const auto& r : rows)
        table.push_back({Cell(r.bound), Cell(r.x), Cell(r.theta),
                         Cell(static_cast<long>(r.trials)), Cell(static_cast<long>(r.violations)),
                         Cell(r.rate), Cell(r.bound_value), Cell(r.mc_se), Cell(r.exact_tail)});
    write_csv(out_dir / "diagnostics.csv",
              {"bound", "x", "theta", "trials", "violations", "rate", "bound_value", "mc_se",
               "exact_tail"},
              table);

    json echo{{"dim", dc.dim},       {"trials", dc.trials},
              {"x_values", dc.x_values}, {"theta_values", dc.theta_values},
              {"seed", dc.seed},     {"threads", dc.threads}};
    write_manifest(out_dir, "diagnose", echo, {"diagnostics.csv"});
    return 0;
}

int cmd_curves(const CommonFlags& flags) {
    const json config = load_config(flags.config_path);
    reject_unknown_keys(config, kSimKeys);
    SimConfig sim = sim_from_config(config, flags, /*need_seed=*/true);

    const fs::path out_dir(flags.out_dir);
    ensure_out_dir(out_dir);

    const SyntheticDataset data = generate(sim, sim.seed);
    const Matrix k = build_kernel_matrix(KernelSpec::from_name(sim.kernel), data.pts);
    Eigensystem eig = eigendecompose(k);
    const auto lambdas = default_lambda_grid(eig, sim.n, sim.lambda_grid_size);
    const auto family = SmootherFamily::ridge_path(std::move(eig), lambdas, sim.n);
    const auto rows = bias_variance_curves(family, data.f, data.sigma2, sim.threads);

    std::vector<std::vector<Cell>> table;
    for (const auto& r : rows)
        table.push_back({Cell(r.df), Cell(r.bias), Cell(r.variance), Cell(r.minimal_penalty),
                         Cell(r.ideal_penalty), Cell(r.expected_risk)});
    write_csv(out_dir / "curves.csv",
              {"df", "bias", "variance", "minimal_penalty", "ideal_penalty", "expected_risk"},
              table);
    write_manifest(out_dir, "curves", sim_to_json(sim), {"curves.csv"});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimal-penalty calibration of linear smoothers"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string data_path;
    std::vector<std::string> method_flags;
    long trials_flag = 0;
    std::string simd_backend = "auto";
    app.add_option("--simd", simd_backend, "simd backend: auto|scalar|avx2");

    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "estimate sigma^2 and select a smoother on CSV data");
    calibrate_cmd->add_option("data", data_path, "CSV with feature columns + response (header row)")
        ->required();
    add_common_flags(calibrate_cmd, flags);

    auto* jump_cmd = app.add_subcommand("jump", "df-vs-penalty jump curves");
    add_common_flags(jump_cmd, flags);

    auto* compare_cmd = app.add_subcommand("compare", "method comparison over replications");
    add_common_flags(compare_cmd, flags);
    compare_cmd->add_option("--methods", method_flags, "subset of methods to run");

    auto* diagnose_cmd =
        app.add_subcommand("diagnose", "Monte-Carlo check of the concentration bounds");
    add_common_flags(diagnose_cmd, flags);
    diagnose_cmd->add_option("--trials", trials_flag, "Monte-Carlo trials");

    auto* curves_cmd = app.add_subcommand("curves", "bias-variance decomposition along a path");
    add_common_flags(curves_cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        simd::set_backend(simd_backend);
        if (calibrate_cmd->parsed()) return cmd_calibrate(flags, data_path);
        if (jump_cmd->parsed()) return cmd_jump(flags);
        if (compare_cmd->parsed()) return cmd_compare(flags, method_flags);
        if (diagnose_cmd->parsed()) return cmd_diagnose(flags, trials_flag);
        if (curves_cmd->parsed()) return cmd_curves(flags);
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const no_jump_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
