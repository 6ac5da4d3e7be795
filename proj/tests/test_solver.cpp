#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "oracle_helpers.hpp"
#include "ssanova/solver.hpp"

using namespace ssanova;

namespace {

std::shared_ptr<const Dataset> random_dataset(int n, int d, std::mt19937& gen,
                                              bool smooth_signal = true) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.3);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) X(i, j) = unif(gen);
        double signal = 0.0;
        if (smooth_signal) {
            signal = std::sin(2.0 * M_PI * X(i, 0));
            if (d > 1) signal += X(i, 1) * X(i, 1) - X(i, 1);
        }
        y[i] = signal + noise(gen);
    }
    return std::make_shared<const Dataset>(Dataset::from_matrix(std::move(X), std::move(y)));
}

ModelSpec full_spec(int d, int m) {
    ModelSpec spec;
    spec.d = d;
    spec.m = m;
    spec.effects = effects_up_to_order(d, d);
    return spec;
}

// the penalized objective of the finite-dimensional problem
double objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& K, double lambda,
                 double intercept, const Eigen::VectorXd& c) {
    const Eigen::VectorXd resid = y - Eigen::VectorXd::Constant(y.size(), intercept) - K * c;
    return resid.squaredNorm() / static_cast<double>(y.size()) + lambda * c.dot(K * c);
}

} // namespace

TEST_CASE("constant response yields a pure intercept") {
    std::mt19937 gen(5);
    auto data = std::make_shared<const Dataset>(Dataset::from_matrix(
        random_dataset(15, 2, gen)->covariates, Eigen::VectorXd::Constant(15, 3.25)));
    for (double lambda : {1e-4, 1.0, 50.0}) {
        const FittedModel fit = fit_at_lambda(full_spec(2, 2), data, lambda);
        CHECK(fit.intercept == doctest::Approx(3.25).epsilon(1e-12));
        // coefficient round-off scales with 1/(n*lambda), the size of M^{-1}
        CHECK(fit.coef.cwiseAbs().maxCoeff() < 1e-12 * (1.0 + 1.0 / lambda));
        CHECK(fit.sigma2 == doctest::Approx(0.0).epsilon(1e-18));
    }
}

TEST_CASE("large lambda collapses to the ridge limit") {
    std::mt19937 gen(9);
    auto data = random_dataset(50, 2, gen);
    const FittedModel fit = fit_at_lambda(full_spec(2, 3), data, 1e6);
    const double mean = data->response.mean();
    const double sd = std::sqrt((data->response.array() - mean).square().sum() /
                                (data->response.size() - 1.0));
    CHECK(std::abs(fit.intercept - mean) < 1e-4);
    CHECK(fit.coef.cwiseAbs().maxCoeff() < 1e-4 * sd);
}

TEST_CASE("closed form beats random perturbations of the objective") {
    std::mt19937 gen(13);
    std::normal_distribution<double> delta(0.0, 1.0);
    auto data = random_dataset(20, 2, gen);
    const ModelSpec spec = full_spec(2, 2);
    const double lambda = 1e-3;
    const FittedModel fit = fit_at_lambda(spec, data, lambda);
    const Eigen::MatrixXd& K = fit.grams->penalty();
    const double base = objective(data->response, K, lambda, fit.intercept, fit.coef);
    for (int trial = 0; trial < 1000; ++trial) {
        const double scale = std::pow(10.0, -3.0 + 3.0 * (trial % 7) / 6.0);
        Eigen::VectorXd c = fit.coef;
        for (int i = 0; i < c.size(); ++i) c[i] += scale * delta(gen);
        const double f0 = fit.intercept + scale * delta(gen);
        CHECK(objective(data->response, K, lambda, f0, c) >= base - 1e-12 * std::max(1.0, base));
    }
}

TEST_CASE("coefficients solve the normal equations") {
    std::mt19937 gen(17);
    for (int trial = 0; trial < 5; ++trial) {
        auto data = random_dataset(25, 3, gen);
        const FittedModel fit = fit_at_lambda(full_spec(3, 3), data, 3e-4);
        Eigen::MatrixXd M = fit.grams->penalty();
        M.diagonal().array() += data->n() * fit.lambda;
        const Eigen::VectorXd rhs =
            data->response - Eigen::VectorXd::Constant(data->n(), fit.intercept);
        const double rel = (M * fit.coef - rhs).norm() / rhs.norm();
        CHECK(rel < 1e-8);
    }
}

TEST_CASE("smoother matrix identities") {
    std::mt19937 gen(21);
    auto data = random_dataset(30, 2, gen);
    const ModelSpec spec = full_spec(2, 3);
    const double lambda = 1e-3;
    const Eigen::MatrixXd A = smoother_matrix(spec, *data, lambda);
    const FittedModel fit = fit_at_lambda(spec, data, lambda);

    CHECK((A * data->response - fit.fitted).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((A * Eigen::VectorXd::Ones(30) - Eigen::VectorXd::Ones(30)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(std::abs(A.trace() - fit.trace_smoother) < 1e-8);

    const Eigen::MatrixXd A_big = smoother_matrix(spec, *data, 1e6);
    CHECK((A_big.array() - 1.0 / 30.0).abs().maxCoeff() < 1e-4);
}

TEST_CASE("spectral engine reproduces the direct fit") {
    std::mt19937 gen(29);
    for (int trial = 0; trial < 3; ++trial) {
        auto data = random_dataset(40, 2, gen);
        const ModelSpec spec = full_spec(2, 3);
        auto grams = GramSet::build(validate_spec(spec, *data), *data);
        const SpectralEngine engine(spec, data, grams);
        for (double lambda : {1e-5, 1e-3, 1e-1}) {
            const FittedModel direct = fit_at_lambda(spec, data, lambda, grams);
            const FittedModel spectral = engine.fit(lambda);
            CHECK(std::abs(direct.intercept - spectral.intercept) < 1e-8);
            CHECK((direct.coef - spectral.coef).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((direct.fitted - spectral.fitted).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(std::abs(direct.trace_smoother - spectral.trace_smoother) < 1e-6);
            CHECK(direct.sigma2 == doctest::Approx(spectral.sigma2).epsilon(1e-6));
        }
    }
}

TEST_CASE("gcv: constant response ties break to the largest lambda") {
    std::mt19937 gen(33);
    auto X = random_dataset(12, 2, gen)->covariates;
    auto data = std::make_shared<const Dataset>(
        Dataset::from_matrix(X, Eigen::VectorXd::Constant(12, -1.5)));
    const std::vector<double> grid{1e-4, 1e-2, 1.0};
    const auto [lambda, trace] = gcv_select(full_spec(2, 2), data, grid);
    CHECK(lambda == 1.0);
    CHECK(trace.argmin == 2);
}

TEST_CASE("gcv score falls as gamma grows") {
    std::mt19937 gen(37);
    auto data = random_dataset(30, 2, gen);
    ModelSpec spec = full_spec(2, 3);
    spec.gcv_gamma = 1.0001; // effectively ordinary GCV
    const SpectralEngine plain(spec, data);
    spec.gcv_gamma = 1.4;
    const SpectralEngine inflated(spec, data);
    for (double lambda : {1e-4, 1e-2})
        CHECK(inflated.gcv_score(lambda) > plain.gcv_score(lambda));
}

TEST_CASE("gcv argmin is interior on the default grid for a smooth signal") {
    std::mt19937 gen(41);
    auto data = random_dataset(120, 2, gen);
    const ModelSpec spec = full_spec(2, 3);
    const auto grid = default_lambda_grid(data->n(), spec.m);
    const auto [lambda, trace] = gcv_select(spec, data, grid);
    CHECK(trace.argmin > 0);
    CHECK(trace.argmin < static_cast<int>(grid.size()) - 1);
    for (double score : trace.scores)
        CHECK(std::isfinite(score));
}

TEST_CASE("gcv rejects malformed grids") {
    std::mt19937 gen(43);
    auto data = random_dataset(10, 1, gen);
    const ModelSpec spec = full_spec(1, 2);
    CHECK_THROWS_AS(gcv_select(spec, data, {}), ArgumentError);
    CHECK_THROWS_AS(gcv_select(spec, data, {1e-2, 1e-3}), ArgumentError);
    CHECK_THROWS_AS(gcv_select(spec, data, {-1.0, 1.0}), ArgumentError);
}

TEST_CASE("sigma2 scales quadratically for the intercept-only model") {
    std::mt19937 gen(47);
    auto base = random_dataset(25, 1, gen);
    ModelSpec spec;
    spec.d = 1;
    spec.m = 2;
    spec.effects = {{}};
    const FittedModel fit1 = fit_at_lambda(spec, base, 0.5);
    auto doubled = std::make_shared<const Dataset>(
        Dataset::from_matrix(base->covariates, 2.0 * base->response));
    const FittedModel fit2 = fit_at_lambda(spec, doubled, 0.5);
    CHECK(fit2.sigma2 == doctest::Approx(4.0 * fit1.sigma2).epsilon(1e-10));
    CHECK(sigma2_hat(fit1) == doctest::Approx(fit1.sigma2).epsilon(1e-12));
}

TEST_CASE("effect evaluation: additivity and centering") {
    std::mt19937 gen(53);
    auto data = random_dataset(20, 2, gen);
    const ModelSpec spec = full_spec(2, 3);
    const FittedModel fit = fit_at_lambda(spec, data, 1e-3);

    // representer expansion sums back to the smoothed values
    Eigen::VectorXd total = Eigen::VectorXd::Constant(20, fit.intercept);
    for (const auto& s : fit.spec.penalized_effects()) {
        Eigen::MatrixXd pts(20, s.size());
        for (size_t k = 0; k < s.size(); ++k)
            pts.col(static_cast<Eigen::Index>(k)) = data->covariates.col(s[k] - 1);
        total += eval_effect(fit, s, pts);
    }
    CHECK((total - fit.fitted).cwiseAbs().maxCoeff() < 1e-8);

    // each estimated effect is centered: its integral vanishes
    for (const auto& s : std::vector<std::vector<int>>{{1}, {2}}) {
        std::vector<double> kinks(data->covariates.col(s[0] - 1).data(),
                                  data->covariates.col(s[0] - 1).data() + 20);
        const double integral = oracle::integrate_split(
            [&](double x) {
                Eigen::MatrixXd pt(1, 1);
                pt(0, 0) = x;
                return eval_effect(fit, s, pt)[0];
            },
            kinks, 16);
        CHECK(std::abs(integral) < 1e-6);
    }

    // intercept effect and spec errors
    const Eigen::VectorXd c0 = eval_effect(fit, {}, Eigen::MatrixXd(3, 0));
    CHECK(c0.size() == 3);
    CHECK(c0[0] == fit.intercept);
    CHECK_THROWS_AS(eval_effect(fit, {1, 2, 3}, Eigen::MatrixXd::Zero(1, 3)), SpecError);
}

TEST_CASE("lambda validation") {
    std::mt19937 gen(59);
    auto data = random_dataset(8, 1, gen);
    CHECK_THROWS_AS(fit_at_lambda(full_spec(1, 2), data, 0.0), ArgumentError);
    CHECK_THROWS_AS(fit_at_lambda(full_spec(1, 2), data, -1.0), ArgumentError);
}
