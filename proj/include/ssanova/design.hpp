#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ssanova/errors.hpp"

namespace ssanova {

/// Per-column (min, max) of the raw inputs, kept for inverse transforms.
struct ColumnScale {
    double min = 0.0;
    double max = 1.0;
};

/// Covariates scaled to the unit cube plus the raw response. Immutable once
/// built; safe to share across threads.
struct Dataset {
    Eigen::MatrixXd covariates; // n x d, entries in [0, 1]
    Eigen::VectorXd response;   // length n, unscaled
    std::vector<ColumnScale> scaling;
    std::vector<std::string> covariate_names;
    std::string response_name;
    std::vector<std::string> warnings; // uniformity warnings, dropped-row notes
    long dropped_rows = 0;

    int n() const { return static_cast<int>(response.size()); }
    int dim() const { return static_cast<int>(covariates.cols()); }

    /// Map a scaled coordinate back to the raw units of `column`.
    double unscale(int column, double x01) const;
    /// Map a raw value into [0, 1] using the stored (min, max) of `column`.
    double scale_value(int column, double raw) const;

    /// Wrap a matrix already living in [0,1]^d (identity scaling record).
    static Dataset from_matrix(Eigen::MatrixXd X, Eigen::VectorXd y);
};

/// Lambda selection policy: a fixed value, or GCV over a grid (empty grid
/// means the default grid for the data at hand).
struct LambdaPolicy {
    enum class Kind { GcvGrid, Fixed };
    Kind kind = Kind::GcvGrid;
    double fixed_value = 0.0;
    std::vector<double> grid;
};

/// Model structure: smoothness order, the effect collection (including the
/// intercept {}), and tuning/test parameters.
struct ModelSpec {
    int d = 0;
    int m = 3;
    std::vector<std::vector<int>> effects; // 1-based index sets; {} = intercept
    LambdaPolicy lambda;
    double gcv_gamma = 1.4;
    double alpha = 0.05;

    /// Non-intercept effects in normalized order.
    std::vector<std::vector<int>> penalized_effects() const;
};

/// Load a headered CSV: named response and covariate columns, '.' decimals,
/// no quoting. Covariates are min-max scaled to [0,1]; rows with an empty
/// cell are dropped (counted in `dropped_rows`), unparseable cells raise
/// ParseError with the row index. Columns whose scaled empirical CDF sits
/// further than 0.2 (Kolmogorov-Smirnov) from uniform get a warning.
Dataset load_csv(const std::string& path, const std::string& response_column,
                 const std::vector<std::string>& covariate_columns);

/// Check a spec against the data and return the normalized form: effects
/// sorted by (size, lexicographic), each effect internally sorted.
/// Idempotent.
ModelSpec validate_spec(const ModelSpec& spec, const Dataset& data);

/// Default GCV grid: `points` log-spaced values on [1e-8, 1e2] times the
/// estimation-rate anchor n^{-2m/(2m+1)}.
std::vector<double> default_lambda_grid(int n, int m, int points = 40);

/// All subsets of {1..d} with 1 <= |S| <= max_order, plus the intercept.
std::vector<std::vector<int>> effects_up_to_order(int d, int max_order);

/// "intercept" for {}, otherwise indices joined by 'x' ("x1", "x2x3").
std::string effect_label(const std::vector<int>& effect);

/// Parse CLI effect-list syntax: semicolon-separated comma groups, e.g.
/// "1;2;3;1,2" (the intercept is implicit and always added).
std::vector<std::vector<int>> parse_effect_list(const std::string& text);

} // namespace ssanova
