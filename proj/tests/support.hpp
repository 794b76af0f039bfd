#pragma once

// Random instances and independent reference computations for the tests.

#include "vista/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace vista::test {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
    }
    return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index d, double scale, double floor) {
    const Matrix B = random_matrix(rng, d, d, 1.0);
    Matrix S = scale * (B * B.transpose()) / static_cast<double>(d);
    S.diagonal().array() += floor;
    return 0.5 * (S + S.transpose());
}

inline ClusterParameters random_params(std::mt19937_64& rng, Eigen::Index dx, Eigen::Index dy) {
    ClusterParameters p;
    p.mu = random_matrix(rng, dx, 1, 1.0);
    p.A = random_matrix(rng, dx, dx, 0.15);
    p.A.diagonal().array() -= 0.2;
    p.C = random_matrix(rng, dy, dx, 1.0);
    p.P = random_spd(rng, dx, 0.5, 0.1);
    p.Sigma = random_spd(rng, dy, 0.3, 0.05);
    p.Gamma = random_spd(rng, dx, 0.2, 0.02);
    return p;
}

/// Irregular timestamps with gaps in [0.2, 2.2].
inline std::vector<double> random_timestamps(std::mt19937_64& rng, std::size_t T) {
    std::uniform_real_distribution<double> gap(0.2, 2.2);
    std::vector<double> ts(T);
    double t = gap(rng);
    for (std::size_t k = 0; k < T; ++k) {
        ts[k] = t;
        t += gap(rng);
    }
    return ts;
}

inline TimeSeries random_series(std::mt19937_64& rng, Eigen::Index dy, std::size_t T) {
    TimeSeries s;
    s.patient_id = "r";
    s.timestamps = random_timestamps(rng, T);
    s.observations = random_matrix(rng, dy, static_cast<Eigen::Index>(T), 1.0);
    return s;
}

/// Minimum-norm least-squares solve of C z = e_j for each column j, giving C^+
/// one column at a time.
inline Matrix pinv_by_columns(const Matrix& C) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(C);
    Matrix out(C.cols(), C.rows());
    for (Eigen::Index j = 0; j < C.rows(); ++j) {
        const Vector e = Vector::Unit(C.rows(), j);
        out.col(j) = cod.solve(e);
    }
    return out;
}

/// Largest violation of the four Penrose conditions.
inline double penrose_residual(const Matrix& M, const Matrix& X) {
    const double r1 = (M * X * M - M).cwiseAbs().maxCoeff();
    const double r2 = (X * M * X - X).cwiseAbs().maxCoeff();
    const double r3 = ((M * X).transpose() - M * X).cwiseAbs().maxCoeff();
    const double r4 = ((X * M).transpose() - X * M).cwiseAbs().maxCoeff();
    return std::max({r1, r2, r3, r4});
}

/// ARI from explicit pair counting over all item pairs.
inline double ari_by_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double both = 0, same_a = 0, same_b = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j];
            const bool sb = b[i] == b[j];
            both += (sa && sb) ? 1 : 0;
            same_a += sa ? 1 : 0;
            same_b += sb ? 1 : 0;
            pairs += 1;
        }
    }
    const double expected = same_a * same_b / pairs;
    const double maximum = 0.5 * (same_a + same_b);
    if (maximum == expected) return 1.0;
    return (both - expected) / (maximum - expected);
}

/// Exact two-sided Mann-Whitney p by walking every group assignment with
/// std::next_permutation; U is counted pairwise (ties count one half).
inline double mwu_exact_by_pairs(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::size_t n = pooled.size();
    auto u_of = [&](const std::vector<bool>& in_x) {
        double u = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_x[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (in_x[j]) continue;
                if (pooled[i] > pooled[j]) u += 1.0;
                else if (pooled[i] == pooled[j]) u += 0.5;
            }
        }
        return u;
    };
    std::vector<bool> observed(n, false);
    for (std::size_t i = 0; i < x.size(); ++i) observed[i] = true;
    const double mean = static_cast<double>(x.size() * y.size()) / 2.0;
    const double dev = std::abs(u_of(observed) - mean);

    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(x.size()), true);
    std::sort(mask.begin(), mask.end());
    double extreme = 0, total = 0;
    do {
        total += 1;
        if (std::abs(u_of(mask) - mean) >= dev - 1e-9) extreme += 1;
    } while (std::next_permutation(mask.begin(), mask.end()));
    return extreme / total;
}

}  // namespace vista::test
