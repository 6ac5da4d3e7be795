#include "ssanova/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ssanova/inference.hpp"
#include "ssanova/io.hpp"
#include "ssanova/parallel.hpp"
#include "ssanova/rng.hpp"
#include "ssanova/solver.hpp"
#include "ssanova/spectral.hpp"

namespace ssanova {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// TrueModel
// ---------------------------------------------------------------------------

const std::vector<std::vector<int>>& TrueModel::model_effects() {
    static const std::vector<std::vector<int>> effects{
        {}, {1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}};
    return effects;
}

TrueModel::TrueModel() : rho_(model_effects().size(), 1.0) {}

int TrueModel::index_of(const std::vector<int>& effect) const {
    std::vector<int> key = effect;
    std::sort(key.begin(), key.end());
    const auto& all = model_effects();
    for (size_t i = 0; i < all.size(); ++i)
        if (all[i] == key) return static_cast<int>(i);
    throw ArgumentError("effect " + effect_label(key) + " is not part of the simulation model");
}

double TrueModel::rho(const std::vector<int>& effect) const {
    return rho_[static_cast<size_t>(index_of(effect))];
}

void TrueModel::set_rho(const std::vector<int>& effect, double value) {
    if (!(value >= 0.0 && value <= 1.0))
        throw ArgumentError("rho must lie in [0, 1]");
    rho_[static_cast<size_t>(index_of(effect))] = value;
}

double TrueModel::true_effect(const std::vector<int>& effect,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
    std::vector<int> key = effect;
    std::sort(key.begin(), key.end());
    if (key.empty())
        return 0.35;
    if (x.size() != static_cast<Eigen::Index>(key.size()))
        throw ArgumentError("true_effect point dimension mismatch");
    if (key == std::vector<int>{1}) {
        const double t = x[0];
        return 3.063 * t * t - 2.144 * t + 0.051;
    }
    if (key == std::vector<int>{2}) {
        const double t = x[0];
        return 4.202 * std::exp(-t) - 5.883 * t * t + 8.236 * t - 4.813;
    }
    if (key == std::vector<int>{3}) {
        const double t = x[0];
        return 0.407 * std::log(0.667 * t * t - 1.333 * t + 0.767) + 3.052 * t * t -
               3.052 * t + 1.052;
    }
    if (key == std::vector<int>{1, 2}) {
        const double a = x[0], b = x[1];
        return -11.502 * a * a * b + 11.502 * a * b * b + 5.751 * a * a - 5.751 * b * b -
               3.834 * a + 3.834 * b;
    }
    if (key == std::vector<int>{1, 3}) {
        const double a = x[0], b = x[1];
        return -7.484 * a * a * b + 8.315 * a * b * b - 3.881 * a * b + 3.742 * a * a -
               4.158 * b * b - 0.832 * a + 4.435 * b - 0.832;
    }
    if (key == std::vector<int>{2, 3}) {
        const double a = x[0], b = x[1];
        return -1.353 * a * a * b * b - 6.226 * a * a * b + 8.933 * a * b * b + 1.805 * a * b +
               3.564 * a * a - 4.015 * b * b - 3.880 * a + 1.173 * b + 0.752;
    }
    throw ArgumentError("effect " + effect_label(key) + " is not part of the simulation model");
}

double TrueModel::regression(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (x.size() != 3)
        throw ArgumentError("the simulation model has d = 3 covariates");
    const auto& effects = model_effects();
    double acc = 0.0;
    for (size_t i = 0; i < effects.size(); ++i) {
        const auto& s = effects[i];
        const double r = rho_[i];
        if (r == 0.0) continue;
        Eigen::VectorXd point(static_cast<Eigen::Index>(s.size()));
        for (size_t k = 0; k < s.size(); ++k)
            point[static_cast<Eigen::Index>(k)] = x[s[k] - 1];
        acc += r * true_effect(s, point);
    }
    return acc;
}

Dataset generate_replicate(int n, const TrueModel& truth, std::uint64_t seed) {
    if (n < 2)
        throw ArgumentError("generate_replicate needs n >= 2");
    Rng rng(seed);
    Eigen::MatrixXd X(n, 3);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j)
            X(i, j) = rng.uniform01();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
        y[i] = truth.regression(X.row(i)) + truth.noise_sd() * rng.normal();
    return Dataset::from_matrix(std::move(X), std::move(y));
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd effect_grid(const std::vector<int>& effect, int per_axis) {
    if (per_axis < 2)
        throw ArgumentError("grid resolution must be at least 2 points per axis");
    if (effect.empty())
        return Eigen::MatrixXd(1, 0);
    const int dim = static_cast<int>(effect.size());
    Eigen::VectorXd axis(per_axis);
    for (int i = 0; i < per_axis; ++i)
        axis[i] = static_cast<double>(i) / (per_axis - 1);
    if (dim == 1)
        return axis;
    int total = 1;
    for (int k = 0; k < dim; ++k) total *= per_axis;
    Eigen::MatrixXd pts(total, dim);
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        for (int k = 0; k < dim; ++k) {
            pts(idx, k) = axis[rem % per_axis];
            rem /= per_axis;
        }
    }
    return pts;
}

double quantile_type7(std::vector<double> v, double p) {
    if (v.empty())
        throw ArgumentError("quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

double median_of(std::vector<double> v) { return quantile_type7(std::move(v), 0.5); }

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

std::uint64_t effect_stream_key(const std::vector<int>& effect) {
    std::uint64_t mask = 0;
    for (int j : effect) mask |= 1ULL << (j - 1);
    return mask;
}

ModelSpec simulation_spec(int m, double alpha) {
    ModelSpec spec;
    spec.d = 3;
    spec.m = m;
    spec.effects = TrueModel::model_effects();
    spec.alpha = alpha;
    return spec;
}

} // namespace

// ---------------------------------------------------------------------------
// CI / estimation study
// ---------------------------------------------------------------------------

std::vector<CiScenarioResult> run_ci_study(const CiStudyConfig& config) {
    if (config.replicates < 1)
        throw ArgumentError("replicates must be >= 1");
    const auto& all_effects = TrueModel::model_effects();

    std::vector<std::vector<int>> ci_effects = config.ci_effects;
    if (ci_effects.empty())
        ci_effects = all_effects;
    for (auto& s : ci_effects) std::sort(s.begin(), s.end());

    // grids and true curves, shared across scenarios
    std::vector<Eigen::MatrixXd> grids;
    std::vector<Eigen::VectorXd> truths;
    for (const auto& s : all_effects) {
        grids.push_back(effect_grid(s, config.grid_per_axis));
        const Eigen::MatrixXd& g = grids.back();
        Eigen::VectorXd t(g.rows());
        for (Eigen::Index q = 0; q < g.rows(); ++q)
            t[q] = config.truth.rho(s) * TrueModel::true_effect(s, g.row(q).transpose());
        truths.push_back(std::move(t));
    }

    auto ci_index = [&](size_t effect_idx) -> int {
        for (size_t k = 0; k < ci_effects.size(); ++k)
            if (ci_effects[k] == all_effects[effect_idx]) return static_cast<int>(k);
        return -1;
    };

    std::vector<CiScenarioResult> results;
    for (int n : config.n_values) {
        CiScenarioResult res;
        res.n = n;
        res.replicates = config.replicates;
        res.alpha = config.alpha;
        res.grid_per_axis = config.grid_per_axis;
        res.m = config.m;
        res.seed = config.seed;
        for (const auto& s : all_effects) res.effect_labels.push_back(effect_label(s));
        for (const auto& s : ci_effects) res.ci_effect_labels.push_back(effect_label(s));
        res.rows.resize(static_cast<size_t>(config.replicates));
        res.grid_estimates.resize(ci_effects.size());
        for (size_t k = 0; k < ci_effects.size(); ++k) {
            const int eidx = static_cast<int>(
                std::find(all_effects.begin(), all_effects.end(), ci_effects[k]) -
                all_effects.begin());
            res.grid_estimates[k].resize(config.replicates, grids[static_cast<size_t>(eidx)].rows());
        }

        const ModelSpec spec = simulation_spec(config.m, config.alpha);

        parallel_for(config.replicates, config.jobs, [&](int rep) {
            const std::uint64_t rep_seed =
                derive_stream(config.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep));
            auto data = std::make_shared<const Dataset>(
                generate_replicate(n, config.truth, rep_seed));
            auto grams = GramSet::build(spec, *data);
            const SpectralEngine engine(spec, data, grams);
            const FittedModel fit = engine.fit_gcv();

            CiReplicateRow row;
            row.replicate = rep;
            row.seed = rep_seed;
            row.lambda = fit.lambda;
            row.sigma2 = fit.sigma2;
            row.rmise.resize(all_effects.size());
            row.cov_f.assign(ci_effects.size(), 0.0);
            row.len_f.assign(ci_effects.size(), 0.0);
            row.cov_b.assign(ci_effects.size(), 0.0);
            row.len_b.assign(ci_effects.size(), 0.0);

            const bool any_ci = !ci_effects.empty();
            std::unique_ptr<PosteriorEngine> posterior;
            if (any_ci)
                posterior = std::make_unique<PosteriorEngine>(fit);

            for (size_t ei = 0; ei < all_effects.size(); ++ei) {
                const auto& s = all_effects[ei];
                const Eigen::MatrixXd& grid = grids[ei];
                const Eigen::VectorXd est = eval_effect(fit, s, grid);
                row.rmise[ei] = std::sqrt((est - truths[ei]).squaredNorm() /
                                          static_cast<double>(grid.rows()));
                const int ci = ci_index(ei);
                if (ci < 0) continue;

                res.grid_estimates[static_cast<size_t>(ci)].row(rep) = est.transpose();
                IntervalBand fband, bband;
                if (s.empty()) {
                    fband = intercept_ci(fit, config.alpha, IntervalMethod::Frequentist);
                    bband = posterior->intercept_band(config.alpha);
                } else {
                    const EffectEigensystem eig = effect_eigensystem(fit, s);
                    fband = pointwise_ci(fit, eig, grid, config.alpha);
                    bband = posterior->band(s, grid, config.alpha);
                }
                const Eigen::ArrayXd err = (est - truths[ei]).array().abs();
                row.cov_f[static_cast<size_t>(ci)] =
                    (err <= fband.half_width.array()).cast<double>().mean();
                row.len_f[static_cast<size_t>(ci)] = fband.half_width.mean();
                row.cov_b[static_cast<size_t>(ci)] =
                    (err <= bband.half_width.array()).cast<double>().mean();
                row.len_b[static_cast<size_t>(ci)] = bband.half_width.mean();
            }
            res.rows[static_cast<size_t>(rep)] = std::move(row);
        });

        // aggregates
        for (size_t ei = 0; ei < all_effects.size(); ++ei) {
            CiEffectAggregate agg;
            agg.label = res.effect_labels[ei];
            std::vector<double> rmise;
            rmise.reserve(res.rows.size());
            for (const auto& row : res.rows) rmise.push_back(row.rmise[ei]);
            agg.rmise_mean = mean_of(rmise);
            agg.rmise_median = median_of(rmise);
            const int ci = ci_index(ei);
            if (ci >= 0) {
                agg.has_ci = true;
                std::vector<double> cf, lf, cb, lb;
                for (const auto& row : res.rows) {
                    cf.push_back(row.cov_f[static_cast<size_t>(ci)]);
                    lf.push_back(row.len_f[static_cast<size_t>(ci)]);
                    cb.push_back(row.cov_b[static_cast<size_t>(ci)]);
                    lb.push_back(row.len_b[static_cast<size_t>(ci)]);
                }
                agg.coverage_f = mean_of(cf);
                agg.length_f = mean_of(lf);
                agg.coverage_b = mean_of(cb);
                agg.length_b = mean_of(lb);
                agg.coverage_mc_se = std::sqrt(std::max(
                    agg.coverage_f * (1.0 - agg.coverage_f) / res.rows.size(), 0.0));

                // empirical length: half the (alpha/2, 1-alpha/2) quantile gap of
                // the estimates across replicates, averaged over grid points
                const Eigen::MatrixXd& est = res.grid_estimates[static_cast<size_t>(ci)];
                double acc = 0.0;
                for (Eigen::Index q = 0; q < est.cols(); ++q) {
                    std::vector<double> col(est.rows());
                    for (Eigen::Index r = 0; r < est.rows(); ++r)
                        col[static_cast<size_t>(r)] = est(r, q);
                    const double hi = quantile_type7(col, 1.0 - config.alpha / 2.0);
                    const double lo = quantile_type7(std::move(col), config.alpha / 2.0);
                    acc += (hi - lo) / 2.0;
                }
                agg.empirical_length = acc / static_cast<double>(est.cols());
            }
            res.aggregates.push_back(std::move(agg));
        }
        results.push_back(std::move(res));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Test size/power study
// ---------------------------------------------------------------------------

std::vector<TestScenarioResult> run_test_study(const TestStudyConfig& config) {
    if (config.replicates < 1)
        throw ArgumentError("replicates must be >= 1");
    std::vector<int> target = config.target;
    std::sort(target.begin(), target.end());
    if (target.empty())
        throw ArgumentError("test study target must be a non-intercept effect");
    for (double r : config.rho_values)
        if (!(r >= 0.0 && r <= 1.0))
            throw ArgumentError("rho values must lie in [0, 1]");

    const ModelSpec spec = simulation_spec(config.m, config.alpha);
    const std::uint64_t scenario_key = effect_stream_key(target) << 32;

    std::vector<TestScenarioResult> results;
    for (int n : config.n_values) {
        std::vector<TestScenarioResult> per_rho(config.rho_values.size());
        for (size_t ri = 0; ri < config.rho_values.size(); ++ri) {
            per_rho[ri].n = n;
            per_rho[ri].rho = config.rho_values[ri];
            per_rho[ri].target_label = effect_label(target);
            per_rho[ri].replicates = config.replicates;
            per_rho[ri].alpha = config.alpha;
            per_rho[ri].m = config.m;
            per_rho[ri].seed = config.seed;
            per_rho[ri].rows.resize(static_cast<size_t>(config.replicates));
        }

        parallel_for(config.replicates, config.jobs, [&](int rep) {
            const std::uint64_t rep_seed = derive_stream(
                config.seed, static_cast<std::uint64_t>(n) ^ scenario_key,
                static_cast<std::uint64_t>(rep));

            // All rho values share X and noise at this seed, so the Gram
            // matrices and both eigendecompositions are computed once.
            std::shared_ptr<const GramSet> grams;
            std::unique_ptr<SpectralEngine> engine;
            std::unique_ptr<EffectEigensystem> eig;
            for (size_t ri = 0; ri < config.rho_values.size(); ++ri) {
                TrueModel truth = config.base;
                truth.set_rho(target, config.rho_values[ri]);
                auto data = std::make_shared<const Dataset>(
                    generate_replicate(n, truth, rep_seed));
                if (!engine) {
                    grams = GramSet::build(spec, *data);
                    engine = std::make_unique<SpectralEngine>(spec, data, grams);
                } else {
                    engine = std::make_unique<SpectralEngine>(engine->with_response(data));
                }
                const FittedModel fit = engine->fit_gcv();
                if (!eig)
                    eig = std::make_unique<EffectEigensystem>(effect_eigensystem(fit, target));
                const TestReport report = wald_test(fit, *eig, config.alpha);

                TestReplicateRow row;
                row.replicate = rep;
                row.seed = rep_seed;
                row.lambda = fit.lambda;
                row.sigma2 = fit.sigma2;
                row.statistic = report.statistic;
                row.p_value = report.p_value;
                row.reject = report.reject;
                row.norm_sq = report.norm_sq;
                row.centering = report.centering;
                row.s1 = report.s1;
                row.s2 = report.s2;
                per_rho[ri].rows[static_cast<size_t>(rep)] = row;
            }
        });

        for (auto& res : per_rho) {
            double rejections = 0.0;
            for (const auto& row : res.rows) rejections += row.reject ? 1.0 : 0.0;
            res.rejection_rate = rejections / static_cast<double>(res.rows.size());
            res.mc_se = std::sqrt(
                std::max(res.rejection_rate * (1.0 - res.rejection_rate) /
                             static_cast<double>(res.rows.size()),
                         0.0));
            results.push_back(std::move(res));
        }
    }
    return results;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

void write_ci_csv(const CiScenarioResult& result, const std::string& path) {
    std::ostringstream out;
    out << "replicate,seed,lambda,sigma2";
    for (const auto& label : result.effect_labels)
        out << ",rmise_" << label;
    for (const auto& label : result.ci_effect_labels)
        out << ",covf_" << label << ",lenf_" << label << ",covb_" << label << ",lenb_" << label;
    out << "\n";
    out.precision(17);
    for (const auto& row : result.rows) {
        out << row.replicate << "," << row.seed << "," << row.lambda << "," << row.sigma2;
        for (double v : row.rmise) out << "," << v;
        for (size_t k = 0; k < result.ci_effect_labels.size(); ++k)
            out << "," << row.cov_f[k] << "," << row.len_f[k] << "," << row.cov_b[k] << ","
                << row.len_b[k];
        out << "\n";
    }
    atomic_write_text(path, out.str());
}

void write_test_csv(const TestScenarioResult& result, const std::string& path) {
    std::ostringstream out;
    out << "replicate,seed,lambda,sigma2,statistic,p_value,reject,norm_sq,centering,s1,s2\n";
    out.precision(17);
    for (const auto& row : result.rows) {
        out << row.replicate << "," << row.seed << "," << row.lambda << "," << row.sigma2 << ","
            << row.statistic << "," << row.p_value << "," << (row.reject ? 1 : 0) << ","
            << row.norm_sq << "," << row.centering << "," << row.s1 << "," << row.s2 << "\n";
    }
    atomic_write_text(path, out.str());
}

namespace {

ordered_json ci_config_json(const CiStudyConfig& config) {
    ordered_json effects = ordered_json::array();
    const auto list = config.ci_effects.empty() ? TrueModel::model_effects() : config.ci_effects;
    for (const auto& s : list) effects.push_back(effect_label(s));
    ordered_json rho = ordered_json::object();
    for (const auto& s : TrueModel::model_effects())
        rho[effect_label(s)] = config.truth.rho(s);
    return ordered_json{{"n_values", config.n_values},
                        {"replicates", config.replicates},
                        {"alpha", config.alpha},
                        {"grid_per_axis", config.grid_per_axis},
                        {"m", config.m},
                        {"seed", config.seed},
                        {"ci_effects", effects},
                        {"rho", rho}};
}

} // namespace

void write_ci_summary_json(const std::vector<CiScenarioResult>& results,
                           const CiStudyConfig& config, const std::string& path) {
    ordered_json doc;
    doc["schema_version"] = "1";
    doc["study"] = "ci";
    doc["config"] = ci_config_json(config);
    doc["scenarios"] = ordered_json::array();
    for (const auto& res : results) {
        ordered_json scn;
        scn["n"] = res.n;
        scn["replicates"] = res.replicates;
        scn["effects"] = ordered_json::array();
        for (const auto& agg : res.aggregates) {
            ordered_json e;
            e["effect"] = agg.label;
            e["rmise_mean"] = agg.rmise_mean;
            e["rmise_median"] = agg.rmise_median;
            if (agg.has_ci) {
                e["coverage_ssaec"] = agg.coverage_f;
                e["length_ssaec"] = agg.length_f;
                e["coverage_ssaebc"] = agg.coverage_b;
                e["length_ssaebc"] = agg.length_b;
                e["empirical_length"] = agg.empirical_length;
                e["coverage_mc_se"] = agg.coverage_mc_se;
            }
            scn["effects"].push_back(std::move(e));
        }
        doc["scenarios"].push_back(std::move(scn));
    }
    atomic_write_text(path, doc.dump(2) + "\n");
}

void write_test_summary_json(const std::vector<TestScenarioResult>& results,
                             const TestStudyConfig& config, const std::string& path) {
    ordered_json doc;
    doc["schema_version"] = "1";
    doc["study"] = "test";
    ordered_json rho_base = ordered_json::object();
    for (const auto& s : TrueModel::model_effects())
        rho_base[effect_label(s)] = config.base.rho(s);
    doc["config"] = ordered_json{{"n_values", config.n_values},
                                 {"rho_values", config.rho_values},
                                 {"target", effect_label(config.target)},
                                 {"replicates", config.replicates},
                                 {"alpha", config.alpha},
                                 {"m", config.m},
                                 {"seed", config.seed},
                                 {"rho_base", rho_base}};
    doc["scenarios"] = ordered_json::array();
    for (const auto& res : results) {
        doc["scenarios"].push_back(ordered_json{{"n", res.n},
                                                {"rho", res.rho},
                                                {"target", res.target_label},
                                                {"replicates", res.replicates},
                                                {"rejection_rate", res.rejection_rate},
                                                {"mc_se", res.mc_se}});
    }
    atomic_write_text(path, doc.dump(2) + "\n");
}

} // namespace ssanova
