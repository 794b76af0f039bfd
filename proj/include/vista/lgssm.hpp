#pragma once

/// @file lgssm.hpp
/// Exact inference for one Delta-scaled linear Gaussian state-space model.
///
/// Step k of a series uses the gap D_k = t_k - t_{k-1}:
///
///   transition        F_k = I + D_k A
///   process noise     D_k Gamma
///   observation noise Sigma / D_k
///
/// The first step has no predecessor and is initialised from (mu, P) with
/// observation noise Sigma, i.e. D_1 is taken as 1.

#include "vista/core_types.hpp"

#include <span>

namespace vista {

struct FilterResult {
    std::vector<Vector> predicted_means;
    std::vector<Matrix> predicted_covs;
    std::vector<Vector> filtered_means;
    std::vector<Matrix> filtered_covs;
    /// Sum of the per-step predictive log-densities, i.e. log p(y_1..y_T).
    double log_likelihood = 0.0;
};

struct SmootherResult {
    std::vector<Vector> smoothed_means;
    std::vector<Matrix> smoothed_covs;
    /// Entry k-1 holds Cov(x_k, x_{k-1} | Y) for k = 1..T-1 (size T-1).
    std::vector<Matrix> lag_one_crosscovs;
};

/// I + delta * A.
Matrix step_matrix(const Matrix& A, double delta);

/// Forward covariance Kalman filter with Joseph-form updates.
///
/// Throws DimensionError when the series and parameters disagree, and
/// InferenceError naming the step when the innovation covariance cannot be
/// factorised even after jitter or its condition number exceeds 1e12.
FilterResult kalman_filter(const TimeSeries& series, const ClusterParameters& params);

/// Backward Rauch-Tung-Striebel pass over a filter run on the same inputs.
SmootherResult rts_smoother(const TimeSeries& series, const ClusterParameters& params,
                            const FilterResult& filter);

/// Deterministic rollout with all noise terms zero: x_1 = mu,
/// x_k = (I + D_k A) x_{k-1}, y_k = C x_k. Returns d_y x T.
Matrix noiseless_trajectory(const ClusterParameters& params, std::span<const double> grid);

struct OracleResult {
    double log_likelihood = 0.0;
    std::vector<Vector> smoothed_means;
};

/// Maximum T*d_x + T*d_y accepted by joint_gaussian_oracle.
inline constexpr Eigen::Index kOracleSizeCap = 200;

/// Independent dense computation of the same quantities as the filter and
/// smoother: the joint Gaussian over all latents and observations is built
/// explicitly, then the observation marginal and the latent conditional mean
/// are evaluated with one dense factorisation. Test-scale only.
OracleResult joint_gaussian_oracle(const TimeSeries& series, const ClusterParameters& params);

}  // namespace vista
