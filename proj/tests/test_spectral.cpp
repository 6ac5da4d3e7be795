#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "ssanova/solver.hpp"
#include "ssanova/spectral.hpp"

using namespace ssanova;

namespace {

std::shared_ptr<const Dataset> uniform_design(int n, int d, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) X(i, j) = unif(gen);
        y[i] = std::cos(2.0 * M_PI * X(i, 0)) + noise(gen);
    }
    return std::make_shared<const Dataset>(Dataset::from_matrix(std::move(X), std::move(y)));
}

FittedModel quick_fit(std::shared_ptr<const Dataset> data, int m, double lambda) {
    ModelSpec spec;
    spec.d = data->dim();
    spec.m = m;
    spec.effects = effects_up_to_order(data->dim(), std::min(data->dim(), 2));
    return fit_at_lambda(spec, std::move(data), lambda);
}

} // namespace

TEST_CASE("eigensystem identities on randomized designs") {
    unsigned seed = 100;
    for (int n : {5, 20, 100}) {
        auto data = uniform_design(n, 3, seed++);
        const FittedModel fit = quick_fit(data, 3, 1e-3);
        for (const auto& s : std::vector<std::vector<int>>{{1}, {3}, {2, 3}}) {
            const EffectEigensystem eig = effect_eigensystem(fit, s);

            // empirical V_S-orthonormality of the scaled eigenvector table
            const Eigen::MatrixXd ortho =
                eig.psi.transpose() * eig.psi / static_cast<double>(n) -
                Eigen::MatrixXd::Identity(n, n);
            CHECK(ortho.cwiseAbs().maxCoeff() < 1e-8);

            // trace identity against the sample mean of the kernel diagonal
            const Eigen::MatrixXd& gram = fit.grams->effect_gram(s);
            CHECK(std::abs(eig.mu.sum() - gram.trace() / n) < 1e-10);

            // Mercer reconstruction of (1/n) K_S
            Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(n, n);
            for (int v = 0; v < n; ++v)
                recon += eig.mu[v] * (eig.psi.col(v) / std::sqrt(double(n))) *
                         (eig.psi.col(v) / std::sqrt(double(n))).transpose();
            CHECK((recon - gram / n).cwiseAbs().maxCoeff() < 1e-8);

            // eigenvalues nonincreasing and clamped at zero
            CHECK(eig.mu.minCoeff() >= 0.0);
            for (int v = 1; v < n; ++v)
                CHECK(eig.mu[v] <= eig.mu[v - 1] + 1e-15);
            CHECK(eig.rank >= 1);
            CHECK(eig.rank <= n);
        }
    }
}

TEST_CASE("single-point eigensystem is the kernel diagonal") {
    // gram-level entry point, below Dataset's n >= 2 rule
    auto kernel = std::make_shared<EffectKernel>(std::vector<int>{1}, 2);
    Eigen::MatrixXd gram(1, 1);
    gram << univariate_kernel(2, 0.3, 0.3);
    auto tiny = std::make_shared<Dataset>();
    tiny->covariates = Eigen::MatrixXd::Constant(1, 1, 0.3);
    tiny->response = Eigen::VectorXd::Zero(1);
    tiny->scaling = {ColumnScale{0.0, 1.0}};

    const EffectEigensystem eig = eigensystem_from_gram(gram, {1}, kernel, tiny);
    REQUIRE(eig.mu.size() == 1);
    CHECK(eig.mu[0] == doctest::Approx(univariate_kernel(2, 0.3, 0.3)));
    CHECK(eig.psi(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eig.rank == 1);
}

TEST_CASE("eigen sums: limits and monotonicity") {
    auto data = uniform_design(40, 2, 7);
    const FittedModel fit = quick_fit(data, 2, 1e-3);
    const EffectEigensystem eig = effect_eigensystem(fit, {1});

    const EigenSums huge = eigen_sums(eig, 1e12);
    CHECK(huge.s1 < 1e-9);
    CHECK(huge.s2 < 1e-9);

    const EigenSums tiny = eigen_sums(eig, 1e-18);
    CHECK(tiny.s1 == doctest::Approx(static_cast<double>(eig.rank)).epsilon(1e-6));
    CHECK(tiny.s2 == doctest::Approx(static_cast<double>(eig.rank)).epsilon(1e-6));

    double prev_s1 = std::numeric_limits<double>::infinity();
    double prev_s2 = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-6, 1e-4, 1e-2}) {
        const EigenSums sums = eigen_sums(eig, lambda);
        CHECK(sums.s1 < prev_s1);
        CHECK(sums.s2 < prev_s2);
        CHECK(sums.s2 <= sums.s1);
        prev_s1 = sums.s1;
        prev_s2 = sums.s2;
    }
    CHECK_THROWS_AS(eigen_sums(eig, 0.0), ArgumentError);
}

TEST_CASE("Nystrom extension reproduces the table at design points") {
    auto data = uniform_design(30, 2, 11);
    const FittedModel fit = quick_fit(data, 3, 1e-4);
    for (const auto& s : std::vector<std::vector<int>>{{2}, {1, 2}}) {
        const EffectEigensystem eig = effect_eigensystem(fit, s);
        Eigen::MatrixXd pts(30, s.size());
        for (size_t k = 0; k < s.size(); ++k)
            pts.col(static_cast<Eigen::Index>(k)) = data->covariates.col(s[k] - 1);
        const Eigen::MatrixXd vals = nystrom_eigenfunctions(eig, pts);
        // dividing by n*mu_v amplifies eigensolver round-off by mu_1/mu_v, so
        // the 1e-6 identity is meaningful for eigenpairs above that noise floor
        for (int v = 0; v < eig.rank && eig.mu[v] >= 1e-8 * eig.mu[0]; ++v) {
            const double scale = eig.psi.col(v).cwiseAbs().maxCoeff();
            CHECK((vals.col(v) - eig.psi.col(v)).cwiseAbs().maxCoeff() < 1e-6 * scale);
        }
    }
}

TEST_CASE("pointwise variance sums: nonnegativity and the Holder bound") {
    auto data = uniform_design(25, 2, 13);
    const FittedModel fit = quick_fit(data, 2, 1e-3);
    const EffectEigensystem eig = effect_eigensystem(fit, {1});
    const EigenSums sums = eigen_sums(eig, fit.lambda);

    std::mt19937 gen(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
        Eigen::VectorXd x(1);
        x << unif(gen);
        const double value = pointwise_variance_sum(eig, fit.lambda, x);
        CHECK(value >= 0.0);
        const Eigen::MatrixXd psi_x = nystrom_eigenfunctions(eig, x.transpose());
        const double max_sq = psi_x.array().square().maxCoeff();
        CHECK(value <= sums.s2 * max_sq * (1.0 + 1e-12));
    }
}

TEST_CASE("variance sum at a design point matches the stored table route") {
    auto data = uniform_design(20, 1, 19);
    const FittedModel fit = quick_fit(data, 2, 1e-3);
    const EffectEigensystem eig = effect_eigensystem(fit, {1});
    const Eigen::VectorXd x = data->covariates.row(4).transpose();
    double direct = 0.0;
    for (int v = 0; v < eig.rank; ++v) {
        const double shrink = eig.mu[v] / (eig.mu[v] + fit.lambda);
        direct += eig.psi(4, v) * eig.psi(4, v) * shrink * shrink;
    }
    CHECK(pointwise_variance_sum(eig, fit.lambda, x) ==
          doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("eigen-sum growth tracks the lambda^(-1/(2m)) rate loosely") {
    // main effect, m = 3: shrinking lambda by 16 should grow s1 by roughly
    // 16^(1/6) ~ 1.59; allow a wide band around it
    auto data = uniform_design(800, 1, 23);
    ModelSpec spec;
    spec.d = 1;
    spec.m = 3;
    spec.effects = {{}, {1}};
    const FittedModel fit = fit_at_lambda(spec, data, 1e-4);
    const EffectEigensystem eig = effect_eigensystem(fit, {1});
    const double lambda = 1e-4;
    const double ratio = eigen_sums(eig, lambda / 16.0).s1 / eigen_sums(eig, lambda).s1;
    CHECK(ratio > 1.2);
    CHECK(ratio < 3.5);
}
