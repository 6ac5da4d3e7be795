#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ssanova/errors.hpp"

namespace ssanova {

/// Scaled Bernoulli polynomials kappa_l = B_l / l! for l = 1..2m.
///
/// Coefficients are built in exact rational arithmetic and rounded to double
/// once at construction, so high orders (l up to 12) carry no recurrence
/// round-off. B_1(x) = x - 1/2, B_2(x) = x^2 - x + 1/6, and every B_l with
/// l >= 1 integrates to zero over [0,1].
class BernoulliBasis {
public:
    static constexpr int kMinOrder = 2;
    static constexpr int kMaxOrder = 6;

    explicit BernoulliBasis(int order);

    int order() const { return m_; }

    /// kappa_l(x) = B_l(x)/l!, evaluated by Horner on the frozen coefficients.
    /// Requires l in [1, 2m] and x in [0, 1].
    double kappa(int l, double x) const;

    /// Coefficients of kappa_l in ascending powers of x.
    const std::vector<double>& coefficients(int l) const;

private:
    int m_;
    std::vector<std::vector<double>> kappa_coeffs_; // index l = 0..2m, l = 0 unused
};

/// Centered order-m Sobolev kernel on [0,1]:
///   k(x, y) = sum_{l=1..m} kappa_l(x) kappa_l(y) + (-1)^{m-1} kappa_{2m}(|x - y|).
/// Symmetric, and each section k(x, .) integrates to zero.
double univariate_kernel(const BernoulliBasis& basis, double x, double y);
double univariate_kernel(int m, double x, double y);

/// Tensor-product kernel for one effect: K_S(a, b) = prod_{j in S} k(a_j, b_j),
/// with S a nonempty set of 1-based covariate indices.
class EffectKernel {
public:
    EffectKernel(std::vector<int> effect, int order);

    const std::vector<int>& effect() const { return effect_; }
    int order() const { return basis_.order(); }
    const BernoulliBasis& basis() const { return basis_; }

    /// Evaluate at two points given in effect coordinates (length |S| each).
    double operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& b) const;

    /// Evaluate at two full d-dimensional rows, restricted to the effect's axes.
    double eval_rows(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                     const Eigen::Ref<const Eigen::RowVectorXd>& b) const;

    /// n x n Gram matrix over the rows of X (n x d, entries in [0,1]).
    /// Each unordered pair is evaluated once, so the result is exactly symmetric.
    Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    /// n x q matrix of K_S(X_iS, p_q); P holds q points in effect coordinates.
    Eigen::MatrixXd cross_gram(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::MatrixXd>& P) const;

private:
    std::vector<int> effect_; // sorted, distinct, 1-based
    BernoulliBasis basis_;
};

/// Penalty kernel K_J = sum over the non-intercept effects of K_S.
class PenaltyKernel {
public:
    PenaltyKernel(std::vector<std::vector<int>> effects, int order);

    const std::vector<EffectKernel>& components() const { return components_; }

    double eval_rows(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                     const Eigen::Ref<const Eigen::RowVectorXd>& b) const;

    /// Entrywise sum of the per-effect Gram matrices.
    Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

private:
    std::vector<EffectKernel> components_;
};

/// Free-function form of the effect-kernel evaluation.
double effect_kernel_eval(const std::vector<int>& effect, int order,
                          const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b);

} // namespace ssanova
