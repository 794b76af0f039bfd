#pragma once

// Temporal emotion networks derived from fitted cluster parameters.

#include "vista/core_types.hpp"

#include <iosfwd>
#include <optional>

namespace vista {

/// Moore-Penrose pseudoinverse via SVD; singular values below
/// 1e-12 * sigma_max count as zero.
Matrix pseudoinverse(const Matrix& m);

/// Observation-space one-step transition C (I + delta A) C^+. delta is in the
/// model's time unit (days for fitted emotion models).
Matrix transition_matrix(const ClusterParameters& params, double delta);

struct TemporalNetwork {
    /// W(r, c): influence of emotion c at the previous step on emotion r.
    Matrix weights;
    /// Step length the network represents, in weeks.
    double delta_weeks = 1.0;

    Eigen::Index size() const noexcept { return weights.rows(); }
};

/// Stores T verbatim; throws DataError for non-square or non-finite input.
TemporalNetwork build_network(const Matrix& T, double delta_weeks);

/// Network of a fitted cluster for a step of delta_weeks weeks.
TemporalNetwork network_for_cluster(const ClusterParameters& params, double delta_weeks);

struct Edge {
    Eigen::Index from;
    Eigen::Index to;
    double weight;
};

/// Every entry as an edge (column-major: from = column, to = row). With a
/// threshold, edges with |w| < threshold are omitted.
std::vector<Edge> edge_list(const TemporalNetwork& net, std::optional<double> threshold = std::nullopt);

/// outEI(c) = sum over r != c of W(r, c).
Vector out_expected_influence(const TemporalNetwork& net);

struct CentralityRanking {
    /// order[l][k]: node at rank k (0 = most central) in cluster l.
    std::vector<std::vector<Eigen::Index>> order;
    /// rank[l][j]: 1-based rank of node j in cluster l.
    std::vector<std::vector<int>> rank;
    /// rank_delta[l][j] = rank[l][j] - rank[0][j].
    std::vector<std::vector<int>> rank_delta;
};

/// Descending sort per cluster, ties broken by node index.
CentralityRanking centrality_ranking(const std::vector<Vector>& scores);

/// CSV with columns cluster, from_emotion, to_emotion, weight.
void write_edges_csv(std::ostream& out, const std::vector<TemporalNetwork>& networks,
                     std::optional<double> threshold = std::nullopt);

/// CSV with columns cluster, emotion, out_expected_influence, rank.
void write_centrality_csv(std::ostream& out, const std::vector<Vector>& scores, const CentralityRanking& ranking);

}  // namespace vista
