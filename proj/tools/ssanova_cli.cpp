// Command-line front end: fit smoothing spline ANOVA models on CSV data, run
// effect-wise Wald tests and pointwise intervals, and drive the Monte-Carlo
// studies. Reports are JSON with stable key order; simulation scenarios also
// emit per-replicate CSV logs. Exit codes: 0 ok, 2 user/config error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "ssanova/inference.hpp"
#include "ssanova/io.hpp"
#include "ssanova/simulation.hpp"
#include "ssanova/solver.hpp"
#include "ssanova/spectral.hpp"

using ordered_json = nlohmann::ordered_json;
using namespace ssanova;

namespace {

constexpr const char* kSchemaVersion = "1";
constexpr double kEpsRank = 1e-12;

struct CommonOptions {
    std::string input;
    std::string response;
    std::string covariates_text;
    std::string effects_text;
    int order = 3;
    double gamma = 1.4;
    double alpha = 0.05;
    double fixed_lambda = 0.0;
    std::string lambda_grid_text;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 0;
    int grid = 40;
    std::string out;
};

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> names;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos)
            names.push_back(item.substr(b, e - b + 1));
    }
    if (names.empty())
        throw ArgumentError("--covariates needs at least one column name");
    return names;
}

std::vector<double> parse_lambda_grid(const std::string& text) {
    // "lo:hi:count", log-spaced inclusive
    double lo = 0.0, hi = 0.0;
    int count = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':')
        throw ArgumentError("--lambda-grid expects lo:hi:count, got '" + text + "'");
    if (!(lo > 0.0) || !(hi >= lo) || count < 1)
        throw ArgumentError("--lambda-grid needs 0 < lo <= hi and count >= 1");
    std::vector<double> grid(static_cast<size_t>(count));
    if (count == 1) {
        grid[0] = std::sqrt(lo * hi);
        return grid;
    }
    const double step = (std::log(hi) - std::log(lo)) / (count - 1);
    for (int i = 0; i < count; ++i)
        grid[static_cast<size_t>(i)] = std::exp(std::log(lo) + step * i);
    return grid;
}

std::uint64_t resolve_seed(const CommonOptions& opts) {
    if (opts.seed_given)
        return opts.seed;
    if (const char* env = std::getenv("SSANOVA_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ArgumentError("SSANOVA_SEED is not an integer: " + std::string(env));
        }
    }
    return 12345;
}

struct LoadedModel {
    std::shared_ptr<const Dataset> data;
    ModelSpec spec;
    FittedModel fit;
    std::uint64_t seed = 0;
};

LoadedModel load_and_fit(const CommonOptions& opts) {
    if (opts.input.empty())
        throw ArgumentError("--input is required");
    if (opts.response.empty())
        throw ArgumentError("--response is required");
    const auto covariates = split_names(opts.covariates_text);
    auto data = std::make_shared<const Dataset>(load_csv(opts.input, opts.response, covariates));
    for (const auto& w : data->warnings)
        std::cerr << "warning: " << w << "\n";

    ModelSpec spec;
    spec.d = data->dim();
    spec.m = opts.order;
    spec.gcv_gamma = opts.gamma;
    spec.alpha = opts.alpha;
    if (!opts.effects_text.empty()) {
        spec.effects = parse_effect_list(opts.effects_text);
    } else {
        spec.effects = {{}};
        for (int j = 1; j <= spec.d; ++j)
            spec.effects.push_back({j});
    }
    if (opts.fixed_lambda > 0.0) {
        spec.lambda.kind = LambdaPolicy::Kind::Fixed;
        spec.lambda.fixed_value = opts.fixed_lambda;
    } else if (!opts.lambda_grid_text.empty()) {
        spec.lambda.grid = parse_lambda_grid(opts.lambda_grid_text);
    }
    spec = validate_spec(spec, *data);

    LoadedModel loaded;
    loaded.seed = resolve_seed(opts);
    loaded.fit = fit_model(spec, data);
    loaded.spec = loaded.fit.spec;
    loaded.data = std::move(data);
    return loaded;
}

ordered_json effect_array(const std::vector<std::vector<int>>& effects) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : effects)
        arr.push_back(effect_label(s));
    return arr;
}

ordered_json config_json(const CommonOptions& opts, const LoadedModel& loaded) {
    const ModelSpec& spec = loaded.spec;
    ordered_json lambda_policy;
    if (spec.lambda.kind == LambdaPolicy::Kind::Fixed) {
        lambda_policy = ordered_json{{"kind", "fixed"}, {"value", spec.lambda.fixed_value}};
    } else {
        const std::vector<double> grid = spec.lambda.grid.empty()
                                             ? default_lambda_grid(loaded.data->n(), spec.m)
                                             : spec.lambda.grid;
        lambda_policy = ordered_json{{"kind", "gcv"}, {"grid", grid}};
    }
    ordered_json scaling = ordered_json::array();
    for (size_t k = 0; k < loaded.data->scaling.size(); ++k)
        scaling.push_back(ordered_json{{"name", loaded.data->covariate_names[k]},
                                       {"min", loaded.data->scaling[k].min},
                                       {"max", loaded.data->scaling[k].max}});
    return ordered_json{{"input", opts.input},
                        {"response", opts.response},
                        {"covariates", loaded.data->covariate_names},
                        {"effects", effect_array(spec.effects)},
                        {"m", spec.m},
                        {"gcv_gamma", spec.gcv_gamma},
                        {"alpha", spec.alpha},
                        {"lambda_policy", lambda_policy},
                        {"seed", loaded.seed},
                        {"grid", opts.grid},
                        {"n", loaded.data->n()},
                        {"dropped_rows", loaded.data->dropped_rows},
                        {"tolerances",
                         ordered_json{{"eps_rank", kEpsRank},
                                      {"quadrature_nodes_per_axis", 24},
                                      {"qmc_points", 1 << 14}}},
                        {"scaling", scaling},
                        {"warnings", loaded.data->warnings}};
}

Eigen::MatrixXd curve_grid(const std::vector<int>& effect, int per_axis) {
    const int dim = static_cast<int>(effect.size());
    Eigen::VectorXd axis(per_axis);
    for (int i = 0; i < per_axis; ++i)
        axis[i] = static_cast<double>(i) / (per_axis - 1);
    if (dim == 1)
        return axis;
    Eigen::MatrixXd pts(per_axis * per_axis, 2);
    for (int i = 0; i < per_axis; ++i)
        for (int j = 0; j < per_axis; ++j) {
            pts(per_axis * i + j, 0) = axis[i];
            pts(per_axis * i + j, 1) = axis[j];
        }
    return pts;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ordered_json vector_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

ordered_json gcv_json(const GcvTrace& trace) {
    ordered_json scores = ordered_json::array();
    for (double s : trace.scores)
        scores.push_back(std::isfinite(s) ? ordered_json(s) : ordered_json("inf"));
    return ordered_json{{"lambdas", trace.lambdas},
                        {"scores", std::move(scores)},
                        {"argmin", trace.argmin},
                        {"skipped", trace.skipped}};
}

ordered_json test_json(const TestReport& report) {
    ordered_json effects = ordered_json::array();
    for (const auto& s : report.effects)
        effects.push_back(effect_label(s));
    ordered_json out{{"effects", std::move(effects)},
                     {"statistic", report.statistic},
                     {"p_value", report.p_value},
                     {"reject", report.reject},
                     {"components",
                      ordered_json{{"norm_sq", report.norm_sq},
                                   {"centering", report.centering},
                                   {"s1", report.s1},
                                   {"s2", report.s2},
                                   {"sigma2", report.sigma2},
                                   {"lambda", report.lambda}}}};
    if (report.qmc_error)
        out["qmc_error"] = *report.qmc_error;
    return out;
}

void emit(const std::string& out_path, const ordered_json& doc) {
    const std::string text = doc.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        atomic_write_text(out_path, text);
    }
}

int cmd_fit(const CommonOptions& opts) {
    const LoadedModel loaded = load_and_fit(opts);
    const FittedModel& fit = loaded.fit;

    ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "fit";
    doc["config"] = config_json(opts, loaded);

    ordered_json results;
    results["lambda"] = fit.lambda;
    if (!fit.gcv.lambdas.empty())
        results["gcv"] = gcv_json(fit.gcv);
    results["intercept"] = fit.intercept;
    results["sigma2"] = fit.sigma2;
    results["trace_smoother"] = fit.trace_smoother;

    ordered_json norms;
    ordered_json curves;
    for (const auto& s : fit.spec.penalized_effects()) {
        const NormComponents norm = effect_sq_norm_detail(fit, s, fit.lambda);
        ordered_json entry{{"value", norm.value}, {"v_part", norm.v_part}, {"j_part", norm.j_part}};
        if (norm.qmc_error)
            entry["qmc_error"] = *norm.qmc_error;
        norms[effect_label(s)] = std::move(entry);
        if (s.size() <= 2) {
            const Eigen::MatrixXd pts = curve_grid(s, opts.grid);
            curves[effect_label(s)] = ordered_json{
                {"points", matrix_json(pts)}, {"values", vector_json(eval_effect(fit, s, pts))}};
        }
    }
    results["effect_norms"] = std::move(norms);
    results["effect_curves"] = std::move(curves);
    doc["results"] = std::move(results);
    emit(opts.out, doc);
    return 0;
}

int cmd_test(const CommonOptions& opts, const std::vector<std::string>& group_texts,
             bool refit_significant) {
    const LoadedModel loaded = load_and_fit(opts);
    const FittedModel& fit = loaded.fit;
    const auto penalized = fit.spec.penalized_effects();

    std::vector<EffectEigensystem> eigs;
    eigs.reserve(penalized.size());
    for (const auto& s : penalized)
        eigs.push_back(effect_eigensystem(fit, s, kEpsRank));
    auto find_eig = [&](const std::vector<int>& s) -> const EffectEigensystem& {
        for (const auto& e : eigs)
            if (e.effect == s) return e;
        throw SpecError("effect " + effect_label(s) + " is not in the fitted model");
    };

    ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "test";
    doc["config"] = config_json(opts, loaded);

    ordered_json results;
    results["lambda"] = fit.lambda;
    results["sigma2"] = fit.sigma2;
    ordered_json singles = ordered_json::array();
    std::vector<std::vector<int>> significant;
    for (const auto& e : eigs) {
        const TestReport report = wald_test(fit, e, fit.spec.alpha);
        if (report.reject)
            significant.push_back(e.effect);
        singles.push_back(test_json(report));
    }
    results["effect_tests"] = std::move(singles);

    if (penalized.size() > 1) {
        std::vector<const EffectEigensystem*> all;
        for (const auto& e : eigs) all.push_back(&e);
        results["group_all"] = test_json(wald_test_group(fit, all, fit.spec.alpha));
    }
    if (!group_texts.empty()) {
        ordered_json groups = ordered_json::array();
        for (const auto& text : group_texts) {
            std::vector<const EffectEigensystem*> members;
            for (const auto& s : parse_effect_list(text)) {
                if (s.empty()) continue; // the list syntax always implies the intercept
                std::vector<int> key = s;
                std::sort(key.begin(), key.end());
                members.push_back(&find_eig(key));
            }
            if (members.empty())
                throw ArgumentError("--group needs at least one non-intercept effect: " + text);
            groups.push_back(test_json(wald_test_group(fit, members, fit.spec.alpha)));
        }
        results["group_tests"] = std::move(groups);
    }

    if (refit_significant) {
        ModelSpec reduced = fit.spec;
        reduced.effects = {{}};
        for (const auto& s : significant)
            reduced.effects.push_back(s);
        ordered_json refit_block;
        refit_block["effects"] = effect_array(reduced.effects);
        if (!significant.empty()) {
            const FittedModel refit = fit_model(reduced, loaded.data);
            refit_block["lambda"] = refit.lambda;
            refit_block["sigma2"] = refit.sigma2;
            refit_block["intercept"] = refit.intercept;
            ordered_json tests = ordered_json::array();
            for (const auto& s : refit.spec.penalized_effects()) {
                const EffectEigensystem e = effect_eigensystem(refit, s, kEpsRank);
                tests.push_back(test_json(wald_test(refit, e, refit.spec.alpha)));
            }
            refit_block["effect_tests"] = std::move(tests);
        } else {
            refit_block["note"] = "no effects rejected; reduced model is intercept-only";
        }
        results["refit_significant"] = std::move(refit_block);
    }

    doc["results"] = std::move(results);
    emit(opts.out, doc);
    return 0;
}

int cmd_ci(const CommonOptions& opts, const std::string& method) {
    const LoadedModel loaded = load_and_fit(opts);
    const FittedModel& fit = loaded.fit;
    const bool want_f = method == "ssaec" || method == "both";
    const bool want_b = method == "ssaebc" || method == "both";
    if (!want_f && !want_b)
        throw ArgumentError("--method must be ssaec, ssaebc, or both");

    ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "ci";
    doc["config"] = config_json(opts, loaded);

    std::unique_ptr<PosteriorEngine> posterior;
    if (want_b)
        posterior = std::make_unique<PosteriorEngine>(fit);

    auto band_json = [](const IntervalBand& band) {
        return ordered_json{
            {"effect", effect_label(band.effect)},
            {"method", band.method == IntervalMethod::Frequentist ? "ssaec" : "ssaebc"},
            {"alpha", band.alpha},
            {"points", matrix_json(band.points)},
            {"estimate", vector_json(band.estimate)},
            {"half_width", vector_json(band.half_width)},
            {"clamped_variances", band.clamped_variances}};
    };

    ordered_json bands = ordered_json::array();
    if (want_f)
        bands.push_back(band_json(intercept_ci(fit, fit.spec.alpha)));
    if (want_b)
        bands.push_back(band_json(posterior->intercept_band(fit.spec.alpha)));
    for (const auto& s : fit.spec.penalized_effects()) {
        if (s.size() > 2) continue; // curves and surfaces only
        const Eigen::MatrixXd pts = curve_grid(s, opts.grid);
        if (want_f) {
            const EffectEigensystem eig = effect_eigensystem(fit, s, kEpsRank);
            bands.push_back(band_json(pointwise_ci(fit, eig, pts, fit.spec.alpha)));
        }
        if (want_b)
            bands.push_back(band_json(posterior->band(s, pts, fit.spec.alpha)));
    }
    doc["results"] = ordered_json{{"lambda", fit.lambda},
                                  {"sigma2", fit.sigma2},
                                  {"bands", std::move(bands)}};
    emit(opts.out, doc);
    return 0;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ArgumentError(std::string(what) + ": bad integer '" + item + "'");
        }
    }
    if (out.empty())
        throw ArgumentError(std::string(what) + " must be nonempty");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ArgumentError(std::string(what) + ": bad number '" + item + "'");
        }
    }
    if (out.empty())
        throw ArgumentError(std::string(what) + " must be nonempty");
    return out;
}

int cmd_simulate(const CommonOptions& opts, const std::string& study, const std::string& n_text,
                 int replicates, double rho_all, const std::string& target_text,
                 const std::string& rho_text, const std::string& out_prefix) {
    if (out_prefix.empty())
        throw ArgumentError("--out-prefix is required for simulate");
    const std::uint64_t seed = resolve_seed(opts);

    if (study == "ci") {
        CiStudyConfig config;
        config.n_values = parse_int_list(n_text, "--n");
        config.replicates = replicates;
        config.alpha = opts.alpha;
        config.grid_per_axis = opts.grid;
        config.m = opts.order;
        config.seed = seed;
        config.jobs = opts.jobs;
        for (const auto& s : TrueModel::model_effects())
            if (!s.empty()) config.truth.set_rho(s, rho_all);
        const auto results = run_ci_study(config);
        for (const auto& res : results)
            write_ci_csv(res, out_prefix + "_ci_n" + std::to_string(res.n) + ".csv");
        write_ci_summary_json(results, config, out_prefix + "_ci_summary.json");

        std::cout << "study=ci seed=" << seed << " replicates=" << config.replicates << "\n";
        for (const auto& res : results) {
            std::cout << "n=" << res.n << "\n";
            for (const auto& agg : res.aggregates) {
                std::cout << "  " << agg.label << ": rmise=" << agg.rmise_median;
                if (agg.has_ci)
                    std::cout << " cov_ssaec=" << agg.coverage_f << " len_ssaec=" << agg.length_f
                              << " cov_ssaebc=" << agg.coverage_b << " len_ssaebc=" << agg.length_b
                              << " empirical=" << agg.empirical_length;
                std::cout << "\n";
            }
        }
        return 0;
    }
    if (study == "test") {
        if (target_text.empty())
            throw ArgumentError("--target is required for the test study");
        TestStudyConfig config;
        config.n_values = parse_int_list(n_text, "--n");
        config.rho_values = parse_double_list(rho_text, "--rho");
        config.target = parse_int_list(target_text, "--target");
        config.replicates = replicates;
        config.alpha = opts.alpha;
        config.m = opts.order;
        config.seed = seed;
        config.jobs = opts.jobs;
        const auto results = run_test_study(config);
        const std::string label = effect_label(config.target);
        for (const auto& res : results) {
            std::ostringstream name;
            name << out_prefix << "_test_" << label << "_n" << res.n << "_rho" << res.rho
                 << ".csv";
            write_test_csv(res, name.str());
        }
        write_test_summary_json(results, config, out_prefix + "_test_" + label + "_summary.json");

        std::cout << "study=test target=" << label << " seed=" << seed
                  << " replicates=" << config.replicates << "\n";
        for (const auto& res : results)
            std::cout << "n=" << res.n << " rho=" << res.rho
                      << " rejection_rate=" << res.rejection_rate << " mc_se=" << res.mc_se
                      << "\n";
        return 0;
    }
    throw ArgumentError("--study must be ci or test");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Effect-wise smoothing spline ANOVA: fitting, inference, simulation"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto add_common = [&](CLI::App* cmd, bool with_data) {
        if (with_data) {
            cmd->add_option("--input", opts.input, "CSV file with a header row");
            cmd->add_option("--response", opts.response, "response column name");
            cmd->add_option("--covariates", opts.covariates_text,
                            "comma-separated covariate column names");
            cmd->add_option("--effects", opts.effects_text,
                            "effect list, e.g. \"1;2;3;1,2\" (intercept implicit; default: "
                            "main effects)");
            cmd->add_option("--lambda", opts.fixed_lambda, "fixed lambda (skips GCV)");
            cmd->add_option("--lambda-grid", opts.lambda_grid_text,
                            "GCV grid as lo:hi:count, log-spaced");
            cmd->add_option("--gamma", opts.gamma, "GCV inflation factor (> 1)");
        }
        cmd->add_option("--order", opts.order, "smoothness order m in [2,6]");
        cmd->add_option("--alpha", opts.alpha, "significance level");
        cmd->add_option("--seed", opts.seed, "RNG seed (falls back to SSANOVA_SEED, then 12345)")
            ->each([&](const std::string&) { opts.seed_given = true; });
        cmd->add_option("--jobs", opts.jobs, "max concurrent replicates (0 = auto)");
        cmd->add_option("--grid", opts.grid, "evaluation grid points per axis");
        cmd->add_option("--out", opts.out, "report path (default: stdout)");
    };

    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model and report the estimate");
    add_common(fit_cmd, true);

    CLI::App* test_cmd = app.add_subcommand("test", "effect-wise Wald tests");
    add_common(test_cmd, true);
    std::vector<std::string> group_texts;
    bool refit_significant = false;
    test_cmd->add_option("--group", group_texts,
                         "extra group test over these effects (repeatable)");
    test_cmd->add_flag("--refit-significant", refit_significant,
                       "re-fit on the rejected effects and re-test");

    CLI::App* ci_cmd = app.add_subcommand("ci", "pointwise confidence intervals per effect");
    add_common(ci_cmd, true);
    std::string method = "both";
    ci_cmd->add_option("--method", method, "ssaec, ssaebc, or both");

    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo studies");
    add_common(sim_cmd, false);
    std::string study, n_text = "250,500", target_text, rho_text = "0,0.3,0.4,0.5";
    std::string out_prefix;
    int replicates = 300;
    double rho_all = 1.0;
    sim_cmd->add_option("--study", study, "ci or test")->required();
    sim_cmd->add_option("--n", n_text, "comma-separated sample sizes");
    sim_cmd->add_option("--replicates", replicates, "Monte-Carlo replicates per scenario");
    sim_cmd->add_option("--rho-all", rho_all, "effect size applied to every effect (ci study)");
    sim_cmd->add_option("--target", target_text, "target effect for the test study, e.g. 2,3");
    sim_cmd->add_option("--rho", rho_text, "comma-separated target effect sizes (test study)");
    sim_cmd->add_option("--out-prefix", out_prefix, "path prefix for CSV/JSON outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit_cmd->parsed())
            return cmd_fit(opts);
        if (test_cmd->parsed())
            return cmd_test(opts, group_texts, refit_significant);
        if (ci_cmd->parsed())
            return cmd_ci(opts, method);
        return cmd_simulate(opts, study, n_text, replicates, rho_all, target_text, rho_text,
                            out_prefix);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
}
