#include "ssanova/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "ssanova/rational.hpp"

namespace ssanova {

namespace {

using detail::Rational;

// Bernoulli numbers b_0..b_max with the b_1 = -1/2 convention, via
// sum_{j=0}^{m} C(m+1, j) b_j = 0.
std::vector<Rational> bernoulli_numbers(int max_index) {
    std::vector<std::vector<std::int64_t>> choose(max_index + 2);
    for (int i = 0; i <= max_index + 1; ++i) {
        choose[i].assign(i + 1, 1);
        for (int j = 1; j < i; ++j)
            choose[i][j] = choose[i - 1][j - 1] + choose[i - 1][j];
    }
    std::vector<Rational> b(max_index + 1);
    b[0] = Rational(1);
    for (int mi = 1; mi <= max_index; ++mi) {
        Rational acc(0);
        for (int j = 0; j < mi; ++j)
            acc = acc + Rational(choose[mi + 1][j]) * b[j];
        b[mi] = Rational(-1, mi + 1) * acc;
    }
    return b;
}

} // namespace

BernoulliBasis::BernoulliBasis(int order) : m_(order) {
    if (order < kMinOrder || order > kMaxOrder)
        throw ArgumentError("smoothness order m must lie in [2, 6], got " + std::to_string(order));

    const int lmax = 2 * order;
    const auto bern = bernoulli_numbers(lmax);
    std::vector<std::vector<std::int64_t>> choose(lmax + 1);
    for (int i = 0; i <= lmax; ++i) {
        choose[i].assign(i + 1, 1);
        for (int j = 1; j < i; ++j)
            choose[i][j] = choose[i - 1][j - 1] + choose[i - 1][j];
    }

    // B_l(x) = sum_k C(l,k) b_{l-k} x^k; kappa_l = B_l / l!.
    kappa_coeffs_.resize(lmax + 1);
    Rational factorial(1);
    for (int l = 1; l <= lmax; ++l) {
        factorial = factorial * Rational(l);
        kappa_coeffs_[l].resize(l + 1);
        for (int k = 0; k <= l; ++k) {
            const Rational c = Rational(choose[l][k]) * bern[l - k] / factorial;
            kappa_coeffs_[l][k] = c.to_double();
        }
    }
}

double BernoulliBasis::kappa(int l, double x) const {
    if (l < 1 || l > 2 * m_)
        throw ArgumentError("kappa order l=" + std::to_string(l) + " outside [1, " +
                            std::to_string(2 * m_) + "]");
    if (!(x >= 0.0 && x <= 1.0))
        throw ArgumentError("kappa argument outside [0,1]: " + std::to_string(x));
    const auto& c = kappa_coeffs_[l];
    double acc = c[l];
    for (int k = l - 1; k >= 0; --k)
        acc = acc * x + c[k];
    return acc;
}

const std::vector<double>& BernoulliBasis::coefficients(int l) const {
    if (l < 1 || l > 2 * m_)
        throw ArgumentError("kappa order l=" + std::to_string(l) + " outside table range");
    return kappa_coeffs_[l];
}

double univariate_kernel(const BernoulliBasis& basis, double x, double y) {
    if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0))
        throw ArgumentError("univariate kernel arguments must lie in [0,1]");
    const int m = basis.order();
    double acc = 0.0;
    for (int l = 1; l <= m; ++l)
        acc += basis.kappa(l, x) * basis.kappa(l, y);
    const double tail = basis.kappa(2 * m, std::abs(x - y));
    return acc + ((m % 2 == 0) ? -tail : tail); // (-1)^{m-1}
}

double univariate_kernel(int m, double x, double y) {
    return univariate_kernel(BernoulliBasis(m), x, y);
}

EffectKernel::EffectKernel(std::vector<int> effect, int order)
    : effect_(std::move(effect)), basis_(order) {
    if (effect_.empty())
        throw ArgumentError("effect kernel requires a nonempty index set");
    std::sort(effect_.begin(), effect_.end());
    if (std::adjacent_find(effect_.begin(), effect_.end()) != effect_.end())
        throw ArgumentError("effect kernel index set has duplicates");
    if (effect_.front() < 1)
        throw ArgumentError("effect indices are 1-based");
}

double EffectKernel::operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                                const Eigen::Ref<const Eigen::VectorXd>& b) const {
    const auto s = static_cast<Eigen::Index>(effect_.size());
    if (a.size() != s || b.size() != s)
        throw ArgumentError("effect kernel point dimension mismatch");
    double prod = 1.0;
    for (Eigen::Index k = 0; k < s; ++k)
        prod *= univariate_kernel(basis_, a[k], b[k]);
    return prod;
}

double EffectKernel::eval_rows(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                               const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
    double prod = 1.0;
    for (int j : effect_) {
        if (j > a.size() || j > b.size())
            throw ArgumentError("effect index exceeds row dimension");
        prod *= univariate_kernel(basis_, a[j - 1], b[j - 1]);
    }
    return prod;
}

Eigen::MatrixXd EffectKernel::gram(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (!X.allFinite())
        throw DataError("gram matrix input contains non-finite coordinates");
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = i; k < n; ++k) {
            const double v = eval_rows(X.row(i), X.row(k));
            G(i, k) = v;
            G(k, i) = v;
        }
    }
    return G;
}

Eigen::MatrixXd EffectKernel::cross_gram(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const Eigen::Ref<const Eigen::MatrixXd>& P) const {
    if (!X.allFinite() || !P.allFinite())
        throw DataError("cross gram input contains non-finite coordinates");
    if (P.cols() != static_cast<Eigen::Index>(effect_.size()))
        throw ArgumentError("cross gram points must be in effect coordinates");
    const Eigen::Index n = X.rows(), q = P.rows();
    const auto s = static_cast<Eigen::Index>(effect_.size());
    Eigen::MatrixXd G(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < q; ++c) {
            double prod = 1.0;
            for (Eigen::Index k = 0; k < s; ++k)
                prod *= univariate_kernel(basis_, X(i, effect_[static_cast<size_t>(k)] - 1), P(c, k));
            G(i, c) = prod;
        }
    }
    return G;
}

PenaltyKernel::PenaltyKernel(std::vector<std::vector<int>> effects, int order) {
    if (effects.empty())
        throw ArgumentError("penalty kernel requires at least one effect");
    components_.reserve(effects.size());
    for (auto& s : effects)
        components_.emplace_back(std::move(s), order);
}

double PenaltyKernel::eval_rows(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
    double acc = 0.0;
    for (const auto& k : components_)
        acc += k.eval_rows(a, b);
    return acc;
}

Eigen::MatrixXd PenaltyKernel::gram(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(X.rows(), X.rows());
    for (const auto& k : components_)
        G += k.gram(X);
    return G;
}

double effect_kernel_eval(const std::vector<int>& effect, int order,
                          const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b) {
    return EffectKernel(effect, order)(a, b);
}

} // namespace ssanova
