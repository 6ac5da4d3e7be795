#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "ssanova/design.hpp"
#include "ssanova/kernels.hpp"

namespace ssanova {

/// Per-effect Gram matrices over the design plus their sum (the penalty
/// kernel matrix). Built once per (spec, data) pair and shared by fits.
class GramSet {
public:
    static std::shared_ptr<const GramSet> build(const ModelSpec& spec, const Dataset& data);

    const std::vector<std::vector<int>>& effects() const { return effects_; }
    const Eigen::MatrixXd& penalty() const { return penalty_; }
    const Eigen::MatrixXd& effect_gram(const std::vector<int>& effect) const;
    const EffectKernel& effect_kernel(const std::vector<int>& effect) const;
    int order() const { return m_; }

private:
    std::vector<std::vector<int>> effects_; // non-intercept, normalized order
    std::vector<EffectKernel> kernels_;
    std::vector<Eigen::MatrixXd> grams_;
    Eigen::MatrixXd penalty_;
    int m_ = 0;

    int index_of(const std::vector<int>& effect) const;
};

/// GCV scan record: the grid, the score at each point, and the winner.
struct GcvTrace {
    std::vector<double> lambdas;
    std::vector<double> scores; // +inf marks skipped points
    int argmin = -1;
    std::vector<int> skipped; // grid indices with non-positive trace denominator
};

/// Penalized least-squares solution at a fixed lambda, with everything the
/// inference layer consumes downstream.
struct FittedModel {
    ModelSpec spec;
    std::shared_ptr<const Dataset> data;
    std::shared_ptr<const GramSet> grams;
    double lambda = 0.0;
    double intercept = 0.0;
    Eigen::VectorXd coef;
    Eigen::VectorXd fitted;
    double trace_smoother = 0.0;
    double sigma2 = 0.0;
    GcvTrace gcv; // empty when lambda was fixed

    int n() const { return static_cast<int>(coef.size()); }
};

/// Closed-form fit at a given lambda via a positive-definite factorization of
/// K_J + n*lambda*I (symmetric-indefinite fallback near breakdown). The
/// inverse is never formed.
FittedModel fit_at_lambda(const ModelSpec& spec, std::shared_ptr<const Dataset> data,
                          double lambda, std::shared_ptr<const GramSet> grams = nullptr);

/// Dense smoother matrix A(lambda): the ridge part plus the rank-one
/// intercept part. A is symmetric, A*1 = 1, and A*y reproduces the fitted
/// values of fit_at_lambda.
Eigen::MatrixXd smoother_matrix(const ModelSpec& spec, const Dataset& data, double lambda,
                                std::shared_ptr<const GramSet> grams = nullptr);

/// Reusable spectral form of the fit: one eigendecomposition of the penalty
/// Gram matrix serves every lambda on a grid (GCV scans, replicate studies)
/// at O(n) per lambda for scores and O(n^2) per fitted model.
class SpectralEngine {
public:
    SpectralEngine(ModelSpec spec, std::shared_ptr<const Dataset> data,
                   std::shared_ptr<const GramSet> grams = nullptr);

    /// Same design and eigendecomposition, different response.
    SpectralEngine with_response(std::shared_ptr<const Dataset> data) const;

    double gcv_score(double lambda) const;
    std::pair<double, GcvTrace> select(const std::vector<double>& grid) const;
    FittedModel fit(double lambda) const;
    /// GCV over the grid (or the default grid if empty), then fit at the winner.
    FittedModel fit_gcv(std::vector<double> grid = {}) const;

    const std::shared_ptr<const GramSet>& grams() const { return grams_; }
    const ModelSpec& spec() const { return spec_; }

private:
    struct Decomp {
        Eigen::VectorXd values; // eigenvalues of K_J, nonincreasing
        Eigen::MatrixXd vectors;
    };

    ModelSpec spec_;
    std::shared_ptr<const Dataset> data_;
    std::shared_ptr<const GramSet> grams_;
    std::shared_ptr<const Decomp> decomp_;
    Eigen::VectorXd z_;  // Q^T 1
    Eigen::VectorXd wy_; // Q^T y

    struct PerLambda {
        double intercept;
        double rss2;    // y^T (I - A)^2 y
        double trace_a; // tr A(lambda)
    };
    PerLambda at(double lambda) const;
};

/// GCV scan using one shared eigendecomposition; ties break toward the
/// larger lambda.
std::pair<double, GcvTrace> gcv_select(const ModelSpec& spec, std::shared_ptr<const Dataset> data,
                                       const std::vector<double>& grid,
                                       std::shared_ptr<const GramSet> grams = nullptr);

/// Fit honoring the ModelSpec lambda policy (fixed value or GCV over a grid).
FittedModel fit_model(const ModelSpec& spec, std::shared_ptr<const Dataset> data,
                      std::shared_ptr<const GramSet> grams = nullptr);

/// sigma^2 estimate y^T (I-A)^2 y / tr(I-A), recomputed from the stored fit.
double sigma2_hat(const FittedModel& fit);

/// Evaluate the effect function at `points` (q x |S|, effect coordinates):
/// f_S(x) = sum_i c_i K_S(X_iS, x). The intercept effect returns a constant
/// vector (points may be q x 0).
Eigen::VectorXd eval_effect(const FittedModel& fit, const std::vector<int>& effect,
                            const Eigen::Ref<const Eigen::MatrixXd>& points);

} // namespace ssanova
