#include "ssanova/spectral.hpp"

#include <cmath>

#include "ssanova/linalg.hpp"

namespace ssanova {

EffectEigensystem eigensystem_from_gram(const Eigen::MatrixXd& gram, std::vector<int> effect,
                                        std::shared_ptr<const EffectKernel> kernel,
                                        std::shared_ptr<const Dataset> data, double eps_rank) {
    const Eigen::Index n = gram.rows();
    SymEig eig = sym_eig_desc(gram / static_cast<double>(n));

    EffectEigensystem out;
    out.effect = std::move(effect);
    out.kernel = std::move(kernel);
    out.data = std::move(data);
    out.eps_rank = eps_rank;
    out.mu = eig.values.cwiseMax(0.0); // K_S is PSD; negatives are round-off
    out.psi = std::sqrt(static_cast<double>(n)) * eig.vectors;
    const double cutoff = out.mu.size() > 0 ? eps_rank * out.mu[0] : 0.0;
    out.rank = 0;
    for (Eigen::Index v = 0; v < out.mu.size(); ++v) {
        if (out.mu[v] > cutoff && out.mu[v] > 0.0)
            ++out.rank;
        else
            break; // sorted nonincreasing
    }
    return out;
}

EffectEigensystem effect_eigensystem(const FittedModel& fit, const std::vector<int>& effect,
                                     double eps_rank) {
    std::vector<int> key = effect;
    std::sort(key.begin(), key.end());
    if (key.empty())
        throw SpecError("the intercept has no effect eigensystem");
    const Eigen::MatrixXd& gram = fit.grams->effect_gram(key);
    auto kernel = std::make_shared<EffectKernel>(fit.grams->effect_kernel(key));
    return eigensystem_from_gram(gram, key, std::move(kernel), fit.data, eps_rank);
}

EigenSums eigen_sums(const EffectEigensystem& eig, double lambda) {
    if (!(lambda > 0.0))
        throw ArgumentError("lambda must be positive");
    EigenSums sums;
    for (int v = 0; v < eig.rank; ++v) {
        const double f = eig.mu[v] / (eig.mu[v] + lambda); // 1/(1 + lambda/mu)
        sums.s1 += f;
        sums.s2 += f * f;
    }
    return sums;
}

Eigen::MatrixXd nystrom_eigenfunctions(const EffectEigensystem& eig,
                                       const Eigen::Ref<const Eigen::MatrixXd>& points) {
    const Eigen::Index n = eig.psi.rows();
    const Eigen::MatrixXd sections = eig.kernel->cross_gram(eig.data->covariates, points); // n x q
    // psi_v(x) = (1/(n mu_v)) sum_i psi_v(X_i) K_S(X_i, x)
    Eigen::MatrixXd vals = sections.transpose() * eig.psi.leftCols(eig.rank); // q x rank
    for (int v = 0; v < eig.rank; ++v)
        vals.col(v) /= static_cast<double>(n) * eig.mu[v];
    return vals;
}

Eigen::VectorXd pointwise_variance_sums(const EffectEigensystem& eig, double lambda,
                                        const Eigen::Ref<const Eigen::MatrixXd>& points) {
    if (!(lambda > 0.0))
        throw ArgumentError("lambda must be positive");
    Eigen::MatrixXd vals = nystrom_eigenfunctions(eig, points); // q x rank
    for (int v = 0; v < eig.rank; ++v)
        vals.col(v) *= eig.mu[v] / (eig.mu[v] + lambda);
    return vals.array().square().rowwise().sum();
}

double pointwise_variance_sum(const EffectEigensystem& eig, double lambda,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
    return pointwise_variance_sums(eig, lambda, x.transpose())[0];
}

} // namespace ssanova
