#include "vista/network.hpp"

#include "vista/lgssm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "csv_util.hpp"

namespace vista {

namespace {

constexpr double kSingularCutoff = 1e-12;

std::string node_name(Eigen::Index i, Eigen::Index n) {
    if (n == static_cast<Eigen::Index>(kNumEmotions)) return std::string(kEmotionNames[static_cast<std::size_t>(i)]);
    return "node" + std::to_string(i);
}

}  // namespace

Matrix pseudoinverse(const Matrix& m) {
    if (m.size() == 0) return Matrix(m.cols(), m.rows());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = kSingularCutoff * (s.size() > 0 ? s[0] : 0.0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] > cutoff) inv[i] = 1.0 / s[i];
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix transition_matrix(const ClusterParameters& params, double delta) {
    check_dimensions(params);
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw Error("transition delta must be finite and >= 0");
    return params.C * step_matrix(params.A, delta) * pseudoinverse(params.C);
}

TemporalNetwork build_network(const Matrix& T, double delta_weeks) {
    if (T.rows() != T.cols()) throw DataError("network matrix must be square");
    if (!T.allFinite()) throw DataError("network matrix has non-finite entries");
    return TemporalNetwork{T, delta_weeks};
}

TemporalNetwork network_for_cluster(const ClusterParameters& params, double delta_weeks) {
    if (!(delta_weeks > 0.0)) throw Error("network delta must be > 0");
    return build_network(transition_matrix(params, kDaysPerWeek * delta_weeks), delta_weeks);
}

std::vector<Edge> edge_list(const TemporalNetwork& net, std::optional<double> threshold) {
    std::vector<Edge> edges;
    const Eigen::Index n = net.size();
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) {
            const double w = net.weights(r, c);
            if (threshold && std::abs(w) < *threshold) continue;
            edges.push_back({c, r, w});
        }
    }
    return edges;
}

Vector out_expected_influence(const TemporalNetwork& net) {
    Vector out = net.weights.colwise().sum().transpose();
    out -= net.weights.diagonal();
    return out;
}

CentralityRanking centrality_ranking(const std::vector<Vector>& scores) {
    CentralityRanking out;
    if (scores.empty()) return out;
    const Eigen::Index n = scores.front().size();
    for (const auto& s : scores) {
        if (s.size() != n) throw DimensionError("score vectors differ in length");
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return s[a] > s[b]; });
        std::vector<int> rank(static_cast<std::size_t>(n));
        for (std::size_t k = 0; k < order.size(); ++k) rank[static_cast<std::size_t>(order[k])] = static_cast<int>(k) + 1;
        out.order.push_back(std::move(order));
        out.rank.push_back(std::move(rank));
    }
    for (const auto& r : out.rank) {
        std::vector<int> d(r.size());
        for (std::size_t j = 0; j < r.size(); ++j) d[j] = r[j] - out.rank.front()[j];
        out.rank_delta.push_back(std::move(d));
    }
    return out;
}

void write_edges_csv(std::ostream& out, const std::vector<TemporalNetwork>& networks, std::optional<double> threshold) {
    out << "cluster,from_emotion,to_emotion,weight\n";
    for (std::size_t l = 0; l < networks.size(); ++l) {
        const Eigen::Index n = networks[l].size();
        for (const Edge& e : edge_list(networks[l], threshold)) {
            out << l << ',' << node_name(e.from, n) << ',' << node_name(e.to, n) << ',' << csv::number(e.weight)
                << '\n';
        }
    }
}

void write_centrality_csv(std::ostream& out, const std::vector<Vector>& scores, const CentralityRanking& ranking) {
    out << "cluster,emotion,out_expected_influence,rank\n";
    for (std::size_t l = 0; l < scores.size(); ++l) {
        const Eigen::Index n = scores[l].size();
        for (Eigen::Index j = 0; j < n; ++j) {
            out << l << ',' << node_name(j, n) << ',' << csv::number(scores[l][j]) << ','
                << ranking.rank[l][static_cast<std::size_t>(j)] << '\n';
        }
    }
}

}  // namespace vista
