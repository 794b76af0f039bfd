#pragma once

/// @file em.hpp
/// Mixture-of-LGSSM clustering fitted by expectation-maximization.
///
/// Each series is a realization of one of M Delta-scaled state-space models.
/// The E-step runs a filter/smoother per (series, cluster) pair and turns the
/// per-cluster marginal likelihoods into responsibilities. The M-step
/// re-estimates every cluster from responsibility-weighted smoother moments;
/// the updates below are the exact maximizers of the expected complete-data
/// log-likelihood under the Delta scaling:
///
///   A     = S[d x_{k-1}'] (S[D x_{k-1} x_{k-1}'])^{-1}      d = x_k - x_{k-1}
///   Gamma = S[(d - D A x_{k-1})(.)' / D] / n_transitions
///   C     = S[D y x'] (S[D x x'])^{-1}
///   Sigma = S[D (y - C x)(.)'] / n_observations
///   mu, P = weighted moments of the smoothed first state
///
/// where S[.] sums over series (weighted by responsibility) and steps.

#include "vista/core_types.hpp"
#include "vista/lgssm.hpp"

#include <cstdint>

namespace vista {

enum class InitStrategy {
    /// mu = global mean of first observations plus a seed-derived perturbation.
    Perturbed,
    /// mu per cluster = mean first observation of a seeded k-means++ partition
    /// of the per-series mean observations.
    KMeans,
};

struct FitConfig {
    int clusters = 2;
    Eigen::Index latent_dim = 7;
    int max_iters = 200;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    double min_weight = 1e-4;
    InitStrategy init = InitStrategy::KMeans;
    /// Relative size of the perturbation applied to each cluster's mu (Perturbed only).
    double perturbation = 1e-2;
    /// Worker threads for the E-step; 0 uses every available core.
    std::size_t threads = 0;

    /// Throws Error when an invariant (M >= 1, d_x >= 1, tol > 0, ...) is violated.
    void validate() const;
};

/// Responsibility-weighted smoother moments for one cluster.
struct SufficientStats {
    double weight = 0.0;        // sum of responsibilities
    double transitions = 0.0;   // sum of r * (T - 1)
    double observations = 0.0;  // sum of r * T
    Vector first_mean;          // sum r E[x_1]
    Matrix first_outer;         // sum r E[x_1 x_1']
    Matrix incr_prev;           // sum r E[(x_k - x_{k-1}) x_{k-1}']
    Matrix prev_prev_delta;     // sum r D_k E[x_{k-1} x_{k-1}']
    Matrix incr_incr_per_delta; // sum r E[(x_k - x_{k-1})(x_k - x_{k-1})'] / D_k
    Matrix obs_latent_delta;    // sum r D_k y_k E[x_k]'
    Matrix latent_latent_delta; // sum r D_k E[x_k x_k']
    Matrix obs_obs_delta;       // sum r D_k y_k y_k'

    static SufficientStats zero(Eigen::Index latent_dim, Eigen::Index obs_dim);
    SufficientStats& operator+=(const SufficientStats& other);
    SufficientStats& operator*=(double r);
};

/// Unweighted moments of one smoothed series.
SufficientStats collect_statistics(const TimeSeries& series, const SmootherResult& smoothed);

struct EStepResult {
    Matrix responsibilities;  // series x clusters
    Matrix log_likelihoods;   // per series, per cluster: log p(Y_i | theta_l)
    std::vector<SufficientStats> stats;
    double total_log_likelihood = 0.0;
    std::vector<std::string> warnings;
    /// Filled only when requested: smoothers[i][l].
    std::vector<std::vector<SmootherResult>> smoothers;
};

/// Identity initialization: C has an identity leading block, A = 0,
/// P = Sigma = Gamma = diag(global per-dimension variance), uniform weights.
/// With M = 1, mu is the global mean of first observations. With M > 1 the
/// cluster means are separated according to config.init, deterministically
/// from config.seed.
FittedMixture initialize_identity(std::span<const TimeSeries> data, const FitConfig& config);

EStepResult e_step(std::span<const TimeSeries> data, const FittedMixture& model, std::size_t threads = 0,
                   bool keep_smoothers = false);

/// Re-estimates parameters and mixing weights from E-step statistics. Frozen
/// clusters keep their parameters; a cluster whose raw weight falls to
/// min_weight becomes frozen.
FittedMixture m_step(const std::vector<SufficientStats>& stats, const FittedMixture& current, const FitConfig& config);

/// Runs EM from the identity initialization.
FittedMixture fit(std::span<const TimeSeries> data, const FitConfig& config);

/// Runs EM from the given parameters and weights.
FittedMixture fit(std::span<const TimeSeries> data, const FitConfig& config, FittedMixture initial);

struct Assignment {
    std::vector<int> labels;
    Matrix responsibilities;
    double total_log_likelihood = 0.0;
};

/// E-step and argmax (ties to the lower cluster index); parameters untouched.
Assignment assign(std::span<const TimeSeries> data, const FittedMixture& model, std::size_t threads = 0);

/// Row-wise argmax with ties broken toward the lower index.
std::vector<int> hard_labels(const Matrix& responsibilities);

/// Adjusted Rand Index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace vista
