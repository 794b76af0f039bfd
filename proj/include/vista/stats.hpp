#pragma once

/// @file stats.hpp
/// Rank tests, multiplicity correction and logistic regression.

#include "vista/core_types.hpp"

#include <span>
#include <string>
#include <vector>

namespace vista::stats {

struct MannWhitneyResult {
    double u_x = 0.0;  ///< rank-sum statistic of the first sample
    double u_y = 0.0;  ///< n_x * n_y - u_x
    double z = 0.0;    ///< signed, continuity-corrected; positive when x tends larger
    double p = 1.0;    ///< two-sided
};

/// Midrank U with the tie-corrected normal approximation and a 0.5
/// continuity correction. Throws Error for an empty sample.
MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y);

/// Largest n_x + n_y accepted by mann_whitney_exact.
inline constexpr std::size_t kExactSizeCap = 16;

/// Two-sided p-value from the exact permutation distribution of U (midranks
/// for ties), by enumerating every assignment of the pooled ranks.
double mann_whitney_exact(std::span<const double> x, std::span<const double> y);

/// min(1, m p) elementwise; throws Error for p outside [0, 1].
std::vector<double> bonferroni(std::span<const double> p_values);

/// Two-sided normal tail probability for a z statistic.
double normal_two_sided_p(double z);

// -----------------------------------------------------------------------------
// Logistic regression
// -----------------------------------------------------------------------------

struct CategoricalCovariate {
    std::string name;
    std::vector<std::string> values;  ///< one per row; empty string = missing
    std::string reference;
};

struct NumericCovariate {
    std::string name;
    std::vector<double> values;  ///< NaN = missing
};

/// Intercept plus covariates after listwise deletion. Categorical levels are
/// one-hot encoded against the reference level, other levels in sorted order;
/// columns are named "<covariate>=<level>".
struct Design {
    Matrix X;
    std::vector<std::string> names;
    std::vector<std::size_t> rows;  ///< input rows kept
    std::size_t dropped = 0;
    std::vector<std::string> reference_levels;  ///< "<covariate>=<reference>"
};

/// If a reference level is absent from the retained rows, the most frequent
/// level (ties to the first in sorted order) becomes the reference.
Design build_design(std::size_t n_rows, const std::vector<NumericCovariate>& numeric,
                    const std::vector<CategoricalCovariate>& categorical);

struct LogisticOptions {
    int max_iters = 100;
    double score_tol = 1e-8;
    double deviance_tol = 1e-10;
    double separation_bound = 15.0;
};

struct RegressionResult {
    std::vector<std::string> names;
    Vector estimates;
    Vector std_errors;
    Vector odds_ratios;
    Vector ci_low;   ///< NaN when separated
    Vector ci_high;  ///< NaN when separated
    Vector p_values;
    std::size_t n = 0;
    std::vector<std::string> reference_levels;
    bool converged = false;
    bool separated = false;
    int iterations = 0;
    std::vector<double> deviance_trace;
};

/// Maximum likelihood by IRLS with step halving. Throws DataError when y is
/// not binary or has a single class, and when columns of X are linearly
/// dependent (the message names the aliased columns).
RegressionResult logistic_fit(const Matrix& X, std::span<const double> y, const std::vector<std::string>& names,
                              const LogisticOptions& options = {});

}  // namespace vista::stats
