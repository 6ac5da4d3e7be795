#include "ssanova/inference.hpp"

#include <cmath>

#include "ssanova/quadrature.hpp"

namespace ssanova {

namespace {

constexpr double kNormRoundoffClamp = -1e-10;
constexpr double kVarianceErrorFloor = -1e-10;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ArgumentError("alpha must lie in (0, 1)");
}

std::vector<int> normalized_effect(std::vector<int> s) {
    std::sort(s.begin(), s.end());
    return s;
}

} // namespace

NormComponents effect_sq_norm_detail(const FittedModel& fit, const std::vector<int>& effect,
                                     double lambda, NormQuadrature quad) {
    if (!(lambda > 0.0))
        throw ArgumentError("lambda must be positive");
    const auto key = normalized_effect(effect);
    if (key.empty())
        throw SpecError("the intercept carries no lambda-weighted effect norm");
    const Eigen::MatrixXd& gram = fit.grams->effect_gram(key);
    const EffectKernel& kernel = fit.grams->effect_kernel(key);
    const int dim = static_cast<int>(key.size());

    NormComponents out;
    out.j_part = lambda * fit.coef.dot(gram * fit.coef);

    if (dim <= 3) {
        const TensorGrid grid = tensor_gauss_legendre(dim, quad.nodes_per_axis);
        const Eigen::VectorXd vals =
            kernel.cross_gram(fit.data->covariates, grid.points).transpose() * fit.coef;
        out.v_part = grid.weights.dot(vals.array().square().matrix());
    } else {
        const Eigen::MatrixXd pts = halton_points(dim, quad.qmc_points);
        const Eigen::VectorXd vals =
            kernel.cross_gram(fit.data->covariates, pts).transpose() * fit.coef;
        const Eigen::ArrayXd sq = vals.array().square();
        out.v_part = sq.mean();
        const double half = sq.head(quad.qmc_points / 2).mean();
        out.qmc_error = std::abs(out.v_part - half);
    }

    out.value = out.v_part + out.j_part;
    if (out.value < 0.0) {
        if (out.value < kNormRoundoffClamp)
            throw NumericalError("effect squared norm came out negative beyond round-off");
        out.value = 0.0;
    }
    return out;
}

double effect_sq_norm(const FittedModel& fit, const std::vector<int>& effect) {
    return effect_sq_norm_detail(fit, effect, fit.lambda).value;
}

double effect_sq_norm(const FittedModel& fit, const std::vector<int>& effect, double lambda) {
    return effect_sq_norm_detail(fit, effect, lambda).value;
}

IntervalBand pointwise_ci(const FittedModel& fit, const EffectEigensystem& eig,
                          const Eigen::Ref<const Eigen::MatrixXd>& points, double alpha) {
    check_alpha(alpha);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double n = static_cast<double>(fit.n());

    IntervalBand band;
    band.effect = eig.effect;
    band.points = points;
    band.method = IntervalMethod::Frequentist;
    band.alpha = alpha;
    band.estimate = eval_effect(fit, eig.effect, points);
    const Eigen::VectorXd varsum = pointwise_variance_sums(eig, fit.lambda, points);
    band.half_width = (z * (fit.sigma2 / n * varsum.array()).sqrt()).matrix();
    return band;
}

IntervalBand intercept_ci(const FittedModel& fit, double alpha, IntervalMethod method) {
    check_alpha(alpha);
    if (method == IntervalMethod::Bayesian)
        return PosteriorEngine(fit).intercept_band(alpha);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    IntervalBand band;
    band.effect = {};
    band.points.resize(1, 0);
    band.method = IntervalMethod::Frequentist;
    band.alpha = alpha;
    band.estimate = Eigen::VectorXd::Constant(1, fit.intercept);
    band.half_width =
        Eigen::VectorXd::Constant(1, z * std::sqrt(fit.sigma2 / static_cast<double>(fit.n())));
    return band;
}

PosteriorEngine::PosteriorEngine(const FittedModel& fit) : fit_(fit) {
    const Eigen::Index n = fit.data->response.size();
    Eigen::MatrixXd M = fit.grams->penalty();
    M.diagonal().array() += n * fit.lambda;
    llt_.compute(M);
    if (llt_.info() != Eigen::Success)
        throw NumericalError("factorization of K_J + n*lambda*I failed");
    minv_one_ = llt_.solve(Eigen::VectorXd::Ones(n));
    one_minv_one_ = minv_one_.sum();
    if (!(one_minv_one_ > 0.0))
        throw NumericalError("degenerate posterior: 1'M^{-1}1 <= 0");
}

IntervalBand PosteriorEngine::band(const std::vector<int>& effect,
                                   const Eigen::Ref<const Eigen::MatrixXd>& points,
                                   double alpha) const {
    check_alpha(alpha);
    const auto key = normalized_effect(effect);
    if (key.empty())
        return intercept_band(alpha);
    const EffectKernel& kernel = fit_.grams->effect_kernel(key);
    const double n = static_cast<double>(fit_.n());
    const double scale = fit_.sigma2 / (n * fit_.lambda);
    const double z = normal_quantile(1.0 - alpha / 2.0);

    const Eigen::MatrixXd sections = kernel.cross_gram(fit_.data->covariates, points); // n x q
    const Eigen::MatrixXd solved = llt_.solve(sections);

    IntervalBand band;
    band.effect = key;
    band.points = points;
    band.method = IntervalMethod::Bayesian;
    band.alpha = alpha;
    band.estimate = sections.transpose() * fit_.coef;
    band.half_width.resize(points.rows());
    for (Eigen::Index q = 0; q < points.rows(); ++q) {
        const Eigen::VectorXd x = points.row(q).transpose();
        const double prior_diag = kernel(x, x);
        const double explained = sections.col(q).dot(solved.col(q));
        const double correction = sections.col(q).dot(minv_one_);
        double variance =
            scale * (prior_diag - explained + correction * correction / one_minv_one_);
        if (variance < 0.0) {
            if (variance < kVarianceErrorFloor)
                throw NumericalError("posterior variance negative beyond round-off: " +
                                     std::to_string(variance));
            variance = 0.0;
            ++band.clamped_variances;
        }
        band.half_width[q] = z * std::sqrt(variance);
    }
    return band;
}

IntervalBand PosteriorEngine::intercept_band(double alpha) const {
    check_alpha(alpha);
    const double n = static_cast<double>(fit_.n());
    const double z = normal_quantile(1.0 - alpha / 2.0);
    IntervalBand band;
    band.effect = {};
    band.points.resize(1, 0);
    band.method = IntervalMethod::Bayesian;
    band.alpha = alpha;
    band.estimate = Eigen::VectorXd::Constant(1, fit_.intercept);
    const double variance = fit_.sigma2 / (n * fit_.lambda * one_minv_one_);
    band.half_width = Eigen::VectorXd::Constant(1, z * std::sqrt(variance));
    return band;
}

IntervalBand bayesian_ci(const FittedModel& fit, const std::vector<int>& effect,
                         const Eigen::Ref<const Eigen::MatrixXd>& points, double alpha) {
    return PosteriorEngine(fit).band(effect, points, alpha);
}

namespace {

TestReport assemble_wald(const FittedModel& fit, std::vector<std::vector<int>> effects,
                         double norm_sq, const EigenSums& sums, double alpha,
                         std::optional<double> qmc_error) {
    if (!(sums.s2 > 0.0))
        throw NumericalError("degenerate spectrum: s2 <= 0 in the Wald denominator");
    const double n = static_cast<double>(fit.n());
    const double sigma2 = fit.sigma2;

    TestReport report;
    report.effects = std::move(effects);
    report.alpha = alpha;
    report.norm_sq = norm_sq;
    report.s1 = sums.s1;
    report.s2 = sums.s2;
    report.sigma2 = sigma2;
    report.lambda = fit.lambda;
    report.centering = sigma2 * sums.s1 / n;
    report.qmc_error = qmc_error;
    report.statistic = n * n * (norm_sq - report.centering) /
                       std::sqrt(2.0 * sigma2 * sigma2 * n * (n - 1.0) * sums.s2);
    report.p_value = 2.0 * (1.0 - normal_cdf(std::abs(report.statistic)));
    report.reject = std::abs(report.statistic) >= normal_quantile(1.0 - alpha / 2.0);
    return report;
}

} // namespace

TestReport wald_test(const FittedModel& fit, const EffectEigensystem& eig, double alpha) {
    check_alpha(alpha);
    const NormComponents norm = effect_sq_norm_detail(fit, eig.effect, fit.lambda);
    const EigenSums sums = eigen_sums(eig, fit.lambda);
    return assemble_wald(fit, {eig.effect}, norm.value, sums, alpha, norm.qmc_error);
}

TestReport wald_test_group(const FittedModel& fit,
                           const std::vector<const EffectEigensystem*>& group, double alpha) {
    check_alpha(alpha);
    if (group.empty())
        throw ArgumentError("group test requires at least one effect");
    double norm_sq = 0.0;
    EigenSums sums;
    std::vector<std::vector<int>> effects;
    std::optional<double> qmc_error;
    for (const EffectEigensystem* eig : group) {
        const NormComponents norm = effect_sq_norm_detail(fit, eig->effect, fit.lambda);
        norm_sq += norm.value;
        if (norm.qmc_error)
            qmc_error = qmc_error.value_or(0.0) + *norm.qmc_error;
        const EigenSums es = eigen_sums(*eig, fit.lambda);
        sums.s1 += es.s1;
        sums.s2 += es.s2;
        effects.push_back(eig->effect);
    }
    return assemble_wald(fit, std::move(effects), norm_sq, sums, alpha, qmc_error);
}

} // namespace ssanova
