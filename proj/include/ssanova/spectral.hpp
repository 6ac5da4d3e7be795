#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "ssanova/design.hpp"
#include "ssanova/kernels.hpp"
#include "ssanova/solver.hpp"

namespace ssanova {

/// Empirical eigensystem of (1/n) K_S: eigenvalues mu (nonincreasing,
/// round-off negatives clamped to zero) and the sqrt(n)-scaled eigenvector
/// table psi, whose column v holds psi_v evaluated at the design points, so
/// (1/n) psi^T psi = I. Columns past `rank` fall below the relative cutoff
/// eps_rank * mu[0] and are excluded from every eigen-sum.
struct EffectEigensystem {
    std::vector<int> effect;
    std::shared_ptr<const Dataset> data;
    std::shared_ptr<const EffectKernel> kernel;
    Eigen::VectorXd mu;
    Eigen::MatrixXd psi;
    int rank = 0;
    double eps_rank = 1e-12;
};

/// Defaults match the fitted model's Gram matrices; eps_rank is configurable.
EffectEigensystem effect_eigensystem(const FittedModel& fit, const std::vector<int>& effect,
                                     double eps_rank = 1e-12);

/// Gram-level entry point (also used for the n = 1 edge case in isolation).
EffectEigensystem eigensystem_from_gram(const Eigen::MatrixXd& gram, std::vector<int> effect,
                                        std::shared_ptr<const EffectKernel> kernel,
                                        std::shared_ptr<const Dataset> data,
                                        double eps_rank = 1e-12);

/// s1 = sum_v 1/(1 + lambda/mu_v), s2 = sum_v 1/(1 + lambda/mu_v)^2,
/// over v <= rank (clamped eigenvalues contribute zero).
struct EigenSums {
    double s1 = 0.0;
    double s2 = 0.0;
};

EigenSums eigen_sums(const EffectEigensystem& eig, double lambda);

/// sum_v psi_v(x)^2 / (1 + lambda/mu_v)^2 with psi extended off the design by
/// the Nystrom relation psi_v(x) = (1/(n mu_v)) sum_i psi_v(X_iS) K_S(X_iS, x),
/// which reproduces the stored table exactly at design points.
double pointwise_variance_sum(const EffectEigensystem& eig, double lambda,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

/// Batched form over q points (rows of `points`, effect coordinates).
Eigen::VectorXd pointwise_variance_sums(const EffectEigensystem& eig, double lambda,
                                        const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Nystrom values of the first `rank` eigenfunctions at the given points
/// (q x rank). Exposed for tests and interval construction.
Eigen::MatrixXd nystrom_eigenfunctions(const EffectEigensystem& eig,
                                       const Eigen::Ref<const Eigen::MatrixXd>& points);

} // namespace ssanova
