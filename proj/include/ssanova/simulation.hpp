#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ssanova/design.hpp"

namespace ssanova {

/// Data-generating process of the simulation study: d = 3 covariates, the
/// fixed effect collection {0}, {1}, {2}, {3}, {1,2}, {1,3}, {2,3}, closed-form
/// effect functions g_S with scale V_S^(1/2) = 0.35, per-effect sizes
/// rho_S in [0, 1], and unit-variance Gaussian noise.
class TrueModel {
public:
    TrueModel(); // every rho_S = 1

    static const std::vector<std::vector<int>>& model_effects();

    double rho(const std::vector<int>& effect) const;
    void set_rho(const std::vector<int>& effect, double value);

    /// g_S at a point in effect coordinates (the intercept returns 0.35).
    static double true_effect(const std::vector<int>& effect,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

    /// Regression function sum_S rho_S g_S at a full covariate row.
    double regression(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

    double noise_sd() const { return 1.0; }

private:
    std::vector<double> rho_;
    int index_of(const std::vector<int>& effect) const;
};

/// One synthetic dataset: X ~ U[0,1]^(n x 3) then y = f(X) + N(0,1) noise,
/// drawn in a fixed order so a seed pins the dataset bit-for-bit. The same
/// seed with different rho values yields the same X and noise.
Dataset generate_replicate(int n, const TrueModel& truth, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Confidence-interval / estimation study
// ---------------------------------------------------------------------------

struct CiStudyConfig {
    std::vector<int> n_values{250, 500, 750, 1000};
    int replicates = 300;
    double alpha = 0.05;
    int grid_per_axis = 40;
    int m = 3;
    std::uint64_t seed = 20250801;
    int jobs = 0; // 0 = hardware concurrency
    /// Effects whose interval metrics are computed ({} entry = intercept).
    /// Empty list means every effect. RMISE is always computed for all.
    std::vector<std::vector<int>> ci_effects;
    TrueModel truth;
};

struct CiReplicateRow {
    int replicate = 0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double sigma2 = 0.0;
    std::vector<double> rmise;  // aligned with CiScenarioResult::effect_labels
    std::vector<double> cov_f;  // aligned with ci_effect_labels
    std::vector<double> len_f;  // mean half-widths over the grid
    std::vector<double> cov_b;
    std::vector<double> len_b;
};

struct CiEffectAggregate {
    std::string label;
    double rmise_mean = 0.0;
    double rmise_median = 0.0;
    bool has_ci = false;
    double coverage_f = 0.0;
    double length_f = 0.0;
    double coverage_b = 0.0;
    double length_b = 0.0;
    double empirical_length = 0.0; // half the cross-replicate quantile gap, grid-averaged
    double coverage_mc_se = 0.0;
};

struct CiScenarioResult {
    int n = 0;
    int replicates = 0;
    double alpha = 0.05;
    int grid_per_axis = 0;
    int m = 3;
    std::uint64_t seed = 0;
    std::vector<std::string> effect_labels;    // intercept first
    std::vector<std::string> ci_effect_labels; // subset with interval metrics
    std::vector<CiReplicateRow> rows;
    /// Per CI effect: replicate x grid-point estimates (for empirical length).
    std::vector<Eigen::MatrixXd> grid_estimates;
    std::vector<CiEffectAggregate> aggregates;
};

std::vector<CiScenarioResult> run_ci_study(const CiStudyConfig& config);

// ---------------------------------------------------------------------------
// Wald-test size/power study
// ---------------------------------------------------------------------------

struct TestStudyConfig {
    std::vector<int> n_values{250, 500, 750, 1000};
    std::vector<double> rho_values{0.0, 0.3, 0.4, 0.5};
    std::vector<int> target; // effect under test, e.g. {2,3}
    int replicates = 300;
    double alpha = 0.05;
    int m = 3;
    std::uint64_t seed = 20250802;
    int jobs = 0;
    TrueModel base; // rho for the non-target effects (default all 1)
};

struct TestReplicateRow {
    int replicate = 0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double sigma2 = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double norm_sq = 0.0;
    double centering = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
};

struct TestScenarioResult {
    int n = 0;
    double rho = 0.0;
    std::string target_label;
    int replicates = 0;
    double alpha = 0.05;
    int m = 3;
    std::uint64_t seed = 0;
    std::vector<TestReplicateRow> rows;
    double rejection_rate = 0.0;
    double mc_se = 0.0; // binomial standard error of the rate
};

/// One scenario per (n, rho). Replicates at the same (n, target, replicate
/// index) share the design and noise across rho values (common random
/// numbers), so one spectral decomposition serves the whole rho sweep.
std::vector<TestScenarioResult> run_test_study(const TestStudyConfig& config);

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

/// Per-replicate CSV logs; written to a temp file then renamed into place.
void write_ci_csv(const CiScenarioResult& result, const std::string& path);
void write_test_csv(const TestScenarioResult& result, const std::string& path);

/// Aggregate JSON summaries (stable key order), same atomic write.
void write_ci_summary_json(const std::vector<CiScenarioResult>& results,
                           const CiStudyConfig& config, const std::string& path);
void write_test_summary_json(const std::vector<TestScenarioResult>& results,
                             const TestStudyConfig& config, const std::string& path);

} // namespace ssanova
