#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ssanova/normal.hpp"
#include "ssanova/solver.hpp"
#include "ssanova/spectral.hpp"

namespace ssanova {

enum class IntervalMethod { Frequentist, Bayesian };

/// Pointwise band for one effect: estimate and half-width per evaluation
/// point (same units as the response).
struct IntervalBand {
    std::vector<int> effect;
    Eigen::MatrixXd points; // q x |S| (q x 0 for the intercept)
    Eigen::VectorXd estimate;
    Eigen::VectorXd half_width;
    IntervalMethod method = IntervalMethod::Frequentist;
    double alpha = 0.05;
    int clamped_variances = 0; // small negative posterior variances clamped to 0
};

/// Squared lambda-weighted norm of an estimated effect:
/// integral of f_S^2 over its domain plus lambda * c' K_S c.
struct NormComponents {
    double value = 0.0;
    double v_part = 0.0; // integral term
    double j_part = 0.0; // lambda * c' K_S c
    std::optional<double> qmc_error; // set when |S| > 3 forces quasi-Monte-Carlo
};

/// Quadrature policy: tensor Gauss-Legendre with `nodes_per_axis` for
/// |S| <= 3, Halton QMC with `qmc_points` beyond.
struct NormQuadrature {
    int nodes_per_axis = 24;
    int qmc_points = 1 << 14;
};

NormComponents effect_sq_norm_detail(const FittedModel& fit, const std::vector<int>& effect,
                                     double lambda, NormQuadrature quad = {});
double effect_sq_norm(const FittedModel& fit, const std::vector<int>& effect);
double effect_sq_norm(const FittedModel& fit, const std::vector<int>& effect, double lambda);

/// Frequentist pointwise band: f_S(x) +/- z_{1-alpha/2} *
/// sqrt(sigma2/n * sum_v psi_v(x)^2/(1+lambda/mu_v)^2), sigma2 plugged in
/// from the fit.
IntervalBand pointwise_ci(const FittedModel& fit, const EffectEigensystem& eig,
                          const Eigen::Ref<const Eigen::MatrixXd>& points, double alpha);

/// Intercept band: f_0 +/- z_{1-alpha/2} * sigma_hat/sqrt(n) (frequentist) or
/// the Gaussian-process posterior with variance sigma2/(n lambda 1'M^{-1}1).
IntervalBand intercept_ci(const FittedModel& fit, double alpha,
                          IntervalMethod method = IntervalMethod::Frequentist);

/// Gaussian-process posterior bands sharing one factorization of
/// K_J + n*lambda*I across effects and evaluation points.
class PosteriorEngine {
public:
    explicit PosteriorEngine(const FittedModel& fit);

    IntervalBand band(const std::vector<int>& effect,
                      const Eigen::Ref<const Eigen::MatrixXd>& points, double alpha) const;
    IntervalBand intercept_band(double alpha) const;

private:
    const FittedModel& fit_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd minv_one_; // M^{-1} 1
    double one_minv_one_ = 0.0;
};

IntervalBand bayesian_ci(const FittedModel& fit, const std::vector<int>& effect,
                         const Eigen::Ref<const Eigen::MatrixXd>& points, double alpha);

/// Wald-type test record. For a group, `effects` lists every member and the
/// components are summed across members.
struct TestReport {
    std::vector<std::vector<int>> effects;
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double alpha = 0.05;
    // components
    double norm_sq = 0.0;
    double centering = 0.0; // sigma2 * s1 / n
    double s1 = 0.0;
    double s2 = 0.0;
    double sigma2 = 0.0;
    double lambda = 0.0;
    std::optional<double> qmc_error;
};

/// Test of H_0: f_S = 0 via
/// T = n^2 (||f_S||^2 - sigma2 s1 / n) / sqrt(2 sigma2^2 n(n-1) s2),
/// two-sided: reject iff |T| >= z_{1-alpha/2}; p = 2(1 - Phi(|T|)).
TestReport wald_test(const FittedModel& fit, const EffectEigensystem& eig, double alpha);

/// Group test: norms and eigen-sums accumulate over the group's members; the
/// statistic and decision rule are unchanged. A singleton group reduces to
/// wald_test exactly.
TestReport wald_test_group(const FittedModel& fit,
                           const std::vector<const EffectEigensystem*>& group, double alpha);

} // namespace ssanova
