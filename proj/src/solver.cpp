#include "ssanova/solver.hpp"

#include <cmath>
#include <limits>

#include "ssanova/linalg.hpp"

namespace ssanova {

namespace {

constexpr double kDegenerateFitTol = 1e-10;    // on the intercept denominator, per n
constexpr double kDegenerateDofTol = 1e-10;    // on tr(I - A)

std::shared_ptr<const GramSet> ensure_grams(const ModelSpec& spec, const Dataset& data,
                                            std::shared_ptr<const GramSet> grams) {
    return grams ? grams : GramSet::build(spec, data);
}

double finalize_sigma2(double rss2, double n_minus_trace) {
    if (n_minus_trace <= kDegenerateDofTol)
        throw NumericalError("degenerate effective degrees of freedom: tr(I - A) = " +
                             std::to_string(n_minus_trace));
    return std::max(rss2 / n_minus_trace, 0.0);
}

} // namespace

std::shared_ptr<const GramSet> GramSet::build(const ModelSpec& spec, const Dataset& data) {
    auto gs = std::make_shared<GramSet>();
    gs->m_ = spec.m;
    gs->effects_ = spec.penalized_effects();
    const Eigen::Index n = data.covariates.rows();
    gs->penalty_ = Eigen::MatrixXd::Zero(n, n);
    gs->kernels_.reserve(gs->effects_.size());
    gs->grams_.reserve(gs->effects_.size());
    for (const auto& s : gs->effects_) {
        gs->kernels_.emplace_back(s, spec.m);
        gs->grams_.push_back(gs->kernels_.back().gram(data.covariates));
        gs->penalty_ += gs->grams_.back();
    }
    return gs;
}

int GramSet::index_of(const std::vector<int>& effect) const {
    for (size_t i = 0; i < effects_.size(); ++i)
        if (effects_[i] == effect) return static_cast<int>(i);
    throw SpecError("effect " + effect_label(effect) + " is not part of the fitted model");
}

const Eigen::MatrixXd& GramSet::effect_gram(const std::vector<int>& effect) const {
    return grams_[static_cast<size_t>(index_of(effect))];
}

const EffectKernel& GramSet::effect_kernel(const std::vector<int>& effect) const {
    return kernels_[static_cast<size_t>(index_of(effect))];
}

FittedModel fit_at_lambda(const ModelSpec& spec_in, std::shared_ptr<const Dataset> data,
                          double lambda, std::shared_ptr<const GramSet> grams) {
    if (!(lambda > 0.0))
        throw ArgumentError("lambda must be positive");
    const ModelSpec spec = validate_spec(spec_in, *data);
    grams = ensure_grams(spec, *data, std::move(grams));

    const Eigen::Index n = data->response.size();
    const double nlam = n * lambda;
    const Eigen::MatrixXd& K = grams->penalty();
    Eigen::MatrixXd M = K;
    M.diagonal().array() += nlam;

    const Eigen::VectorXd& y = data->response;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

    Eigen::VectorXd u, w;
    double trace_minv = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
        u = llt.solve(y);
        w = llt.solve(ones);
        // tr(M^{-1}) = ||L^{-1}||_F^2 from M = L L^T
        const Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
        trace_minv = Linv.squaredNorm();
    } else {
        // K_J + n*lambda*I is PD in exact arithmetic; round-off at tiny lambda
        // can break the Cholesky, so fall back to LDLT.
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("factorization of K_J + n*lambda*I failed");
        u = ldlt.solve(y);
        w = ldlt.solve(ones);
        trace_minv = ldlt.solve(Eigen::MatrixXd::Identity(n, n)).trace();
    }

    // 1'K u = 1'y - n*lambda*1'u and 1'K w = n - n*lambda*1'w, since
    // K = M - n*lambda*I and M u = y, M w = 1. The printed numerator and
    // denominator of the intercept reduce to:
    const double numer = nlam * u.sum();
    const double denom = nlam * w.sum();
    if (std::abs(denom) <= kDegenerateFitTol * static_cast<double>(n))
        throw NumericalError("degenerate fit: intercept denominator ~ 0");

    FittedModel fit;
    fit.spec = spec;
    fit.data = std::move(data);
    fit.grams = grams;
    fit.lambda = lambda;
    fit.intercept = numer / denom;
    fit.coef = u - fit.intercept * w;
    fit.fitted = K * fit.coef;
    fit.fitted.array() += fit.intercept;
    // tr A = tr(K M^{-1}) + ||u_1||^2/den with u_1 = n*lambda*w, den = n*lambda*1'w
    fit.trace_smoother = static_cast<double>(n) - nlam * trace_minv + nlam * w.squaredNorm() / w.sum();
    fit.sigma2 = finalize_sigma2((y - fit.fitted).squaredNorm(),
                                 static_cast<double>(n) - fit.trace_smoother);
    return fit;
}

Eigen::MatrixXd smoother_matrix(const ModelSpec& spec_in, const Dataset& data, double lambda,
                                std::shared_ptr<const GramSet> grams) {
    if (!(lambda > 0.0))
        throw ArgumentError("lambda must be positive");
    const ModelSpec spec = validate_spec(spec_in, data);
    grams = ensure_grams(spec, data, std::move(grams));

    const Eigen::Index n = data.response.size();
    const Eigen::MatrixXd& K = grams->penalty();
    Eigen::MatrixXd M = K;
    M.diagonal().array() += n * lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    Eigen::MatrixXd ridge; // K M^{-1}
    if (llt.info() == Eigen::Success) {
        ridge = llt.solve(K).transpose();
    } else {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("factorization of K_J + n*lambda*I failed");
        ridge = ldlt.solve(K).transpose();
    }
    const Eigen::VectorXd u = Eigen::VectorXd::Ones(n) - ridge * Eigen::VectorXd::Ones(n);
    const double den = u.sum(); // n - 1'K M^{-1} 1
    if (std::abs(den) <= kDegenerateFitTol * static_cast<double>(n))
        throw NumericalError("degenerate fit: intercept denominator ~ 0");
    return ridge + (u * u.transpose()) / den;
}

SpectralEngine::SpectralEngine(ModelSpec spec, std::shared_ptr<const Dataset> data,
                               std::shared_ptr<const GramSet> grams)
    : spec_(validate_spec(spec, *data)), data_(std::move(data)) {
    grams_ = ensure_grams(spec_, *data_, std::move(grams));
    auto dec = std::make_shared<Decomp>();
    SymEig eig = sym_eig_desc(grams_->penalty());
    dec->values = std::move(eig.values);
    dec->vectors = std::move(eig.vectors);
    decomp_ = std::move(dec);
    z_ = decomp_->vectors.transpose() * Eigen::VectorXd::Ones(data_->response.size());
    wy_ = decomp_->vectors.transpose() * data_->response;
}

SpectralEngine SpectralEngine::with_response(std::shared_ptr<const Dataset> data) const {
    if (data->n() != data_->n())
        throw ArgumentError("with_response requires the same design size");
    SpectralEngine out(*this);
    out.data_ = std::move(data);
    out.wy_ = decomp_->vectors.transpose() * out.data_->response;
    return out;
}

SpectralEngine::PerLambda SpectralEngine::at(double lambda) const {
    if (!(lambda > 0.0))
        throw ArgumentError("lambda must be positive");
    const Eigen::Index n = z_.size();
    const double nlam = n * lambda;
    const Eigen::ArrayXd d = decomp_->values.array();
    const Eigen::ArrayXd shrink = d / (d + nlam);      // eigenvalues of K M^{-1}
    const Eigen::ArrayXd resid = 1.0 - shrink;         // n*lambda/(d + n*lambda)

    const Eigen::ArrayXd z = z_.array(), wy = wy_.array();
    const double den = (resid * z.square()).sum();
    if (std::abs(den) <= kDegenerateFitTol * static_cast<double>(n))
        throw NumericalError("degenerate fit: intercept denominator ~ 0");

    PerLambda out;
    out.intercept = (resid * z * wy).sum() / den;
    out.rss2 = (resid.square() * (wy - out.intercept * z).square()).sum();
    out.trace_a = shrink.sum() + (resid.square() * z.square()).sum() / den;
    return out;
}

double SpectralEngine::gcv_score(double lambda) const {
    const PerLambda p = at(lambda);
    const double n = static_cast<double>(z_.size());
    const double tr_denom = n - spec_.gcv_gamma * p.trace_a;
    if (!(tr_denom > 0.0))
        return std::numeric_limits<double>::infinity();
    // GCV(lambda) = [y'(I-A)^2 y / n] / [tr(I - gamma A)/n]^2
    return n * p.rss2 / (tr_denom * tr_denom);
}

std::pair<double, GcvTrace> SpectralEngine::select(const std::vector<double>& grid) const {
    if (grid.empty())
        throw ArgumentError("lambda grid is empty");
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0))
            throw ArgumentError("lambda grid values must be positive");
        if (i > 0 && grid[i] < grid[i - 1])
            throw ArgumentError("lambda grid must be sorted ascending");
    }
    GcvTrace trace;
    trace.lambdas = grid;
    trace.scores.resize(grid.size());
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < grid.size(); ++i) {
        const double score = gcv_score(grid[i]);
        trace.scores[i] = score;
        if (std::isinf(score)) {
            trace.skipped.push_back(static_cast<int>(i));
            continue;
        }
        best = std::min(best, score);
    }
    if (std::isinf(best))
        throw NumericalError("GCV denominator nonpositive across the whole grid");
    // Scores within the numerator's cancellation floor (residuals of an exact
    // fit round to ~0, not 0) count as ties; ties resolve to the larger lambda.
    const double floor = 1e-16 * wy_.squaredNorm() / static_cast<double>(z_.size());
    for (size_t i = 0; i < grid.size(); ++i)
        if (trace.scores[i] <= best + floor)
            trace.argmin = static_cast<int>(i);
    return {grid[static_cast<size_t>(trace.argmin)], trace};
}

FittedModel SpectralEngine::fit(double lambda) const {
    const PerLambda p = at(lambda);
    const Eigen::Index n = z_.size();
    const double nlam = n * lambda;
    const Eigen::ArrayXd d = decomp_->values.array();
    const Eigen::ArrayXd centered = wy_.array() - p.intercept * z_.array();
    const Eigen::ArrayXd coef_spec = centered / (d + nlam);

    FittedModel fit;
    fit.spec = spec_;
    fit.data = data_;
    fit.grams = grams_;
    fit.lambda = lambda;
    fit.intercept = p.intercept;
    fit.coef = decomp_->vectors * coef_spec.matrix();
    fit.fitted = decomp_->vectors * (d / (d + nlam) * centered).matrix();
    fit.fitted.array() += p.intercept;
    fit.trace_smoother = p.trace_a;
    fit.sigma2 = finalize_sigma2(p.rss2, static_cast<double>(n) - p.trace_a);
    return fit;
}

FittedModel SpectralEngine::fit_gcv(std::vector<double> grid) const {
    if (grid.empty())
        grid = spec_.lambda.grid.empty()
                   ? default_lambda_grid(data_->n(), spec_.m)
                   : spec_.lambda.grid;
    auto [lambda, trace] = select(grid);
    FittedModel fit = this->fit(lambda);
    fit.gcv = std::move(trace);
    return fit;
}

std::pair<double, GcvTrace> gcv_select(const ModelSpec& spec, std::shared_ptr<const Dataset> data,
                                       const std::vector<double>& grid,
                                       std::shared_ptr<const GramSet> grams) {
    return SpectralEngine(spec, std::move(data), std::move(grams)).select(grid);
}

FittedModel fit_model(const ModelSpec& spec_in, std::shared_ptr<const Dataset> data,
                      std::shared_ptr<const GramSet> grams) {
    const ModelSpec spec = validate_spec(spec_in, *data);
    if (spec.lambda.kind == LambdaPolicy::Kind::Fixed)
        return fit_at_lambda(spec, std::move(data), spec.lambda.fixed_value, std::move(grams));
    return SpectralEngine(spec, std::move(data), std::move(grams)).fit_gcv();
}

double sigma2_hat(const FittedModel& fit) {
    const double rss2 = (fit.data->response - fit.fitted).squaredNorm();
    return finalize_sigma2(rss2, static_cast<double>(fit.n()) - fit.trace_smoother);
}

Eigen::VectorXd eval_effect(const FittedModel& fit, const std::vector<int>& effect,
                            const Eigen::Ref<const Eigen::MatrixXd>& points) {
    std::vector<int> key = effect;
    std::sort(key.begin(), key.end());
    if (key.empty())
        return Eigen::VectorXd::Constant(points.rows(), fit.intercept);
    bool member = false;
    for (const auto& s : fit.spec.effects)
        if (s == key) { member = true; break; }
    if (!member)
        throw SpecError("effect " + effect_label(key) + " is not in the model's effect collection");
    const EffectKernel& kernel = fit.grams->effect_kernel(key);
    return kernel.cross_gram(fit.data->covariates, points).transpose() * fit.coef;
}

} // namespace ssanova
