#include "vista/lgssm.hpp"

#include "vista/linalg.hpp"

#include "lgssm_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace vista {

Matrix step_matrix(const Matrix& A, double delta) {
    Matrix F = delta * A;
    F.diagonal().array() += 1.0;
    return F;
}

FilterResult kalman_filter(const TimeSeries& series, const ClusterParameters& params) {
    detail::check_compatible(series, params);
    return detail::dispatch(params.latent_dim(), params.obs_dim(), [&]<int DX, int DY>() {
        using K = detail::Kernel<DX, DY>;
        typename K::Trajectory t;
        K::forward(series, typename K::Params(params), t);
        FilterResult out;
        out.predicted_means = K::template convert<Vector>(t.pred_mean);
        out.predicted_covs = K::template convert<Matrix>(t.pred_cov);
        out.filtered_means = K::template convert<Vector>(t.filt_mean);
        out.filtered_covs = K::template convert<Matrix>(t.filt_cov);
        out.log_likelihood = t.log_likelihood;
        return out;
    });
}

SmootherResult rts_smoother(const TimeSeries& series, const ClusterParameters& params,
                            const FilterResult& filter) {
    detail::check_compatible(series, params);
    const std::size_t steps = series.size();
    if (filter.filtered_means.size() != steps || filter.filtered_covs.size() != steps ||
        filter.predicted_means.size() != steps || filter.predicted_covs.size() != steps) {
        throw DimensionError("filter result length does not match series");
    }
    return detail::dispatch(params.latent_dim(), params.obs_dim(), [&]<int DX, int DY>() {
        using K = detail::Kernel<DX, DY>;
        typename K::Trajectory t;
        t.pred_mean = K::template convert<typename K::Latent>(filter.predicted_means);
        t.pred_cov = K::template convert<typename K::LatentCov>(filter.predicted_covs);
        t.filt_mean = K::template convert<typename K::Latent>(filter.filtered_means);
        t.filt_cov = K::template convert<typename K::LatentCov>(filter.filtered_covs);
        K::backward(series, typename K::Params(params), t);
        SmootherResult out;
        out.smoothed_means = K::template convert<Vector>(t.smooth_mean);
        out.smoothed_covs = K::template convert<Matrix>(t.smooth_cov);
        out.lag_one_crosscovs = K::template convert<Matrix>(t.cross);
        return out;
    });
}

Matrix noiseless_trajectory(const ClusterParameters& params, std::span<const double> grid) {
    check_dimensions(params);
    if (grid.empty()) throw DimensionError("empty time grid");
    Matrix out(params.obs_dim(), static_cast<Eigen::Index>(grid.size()));
    Vector x = params.mu;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (k > 0) {
            const double delta = grid[k] - grid[k - 1];
            if (!(delta > 0.0)) throw DimensionError("time grid must be strictly increasing");
            x = step_matrix(params.A, delta) * x;
        }
        out.col(static_cast<Eigen::Index>(k)) = params.C * x;
    }
    return out;
}

OracleResult joint_gaussian_oracle(const TimeSeries& series, const ClusterParameters& params) {
    detail::check_compatible(series, params);
    const auto T = static_cast<Eigen::Index>(series.size());
    const Eigen::Index dx = params.latent_dim();
    const Eigen::Index dy = params.obs_dim();
    if (T * dx + T * dy > kOracleSizeCap) {
        throw Error("joint Gaussian oracle size cap exceeded (" + std::to_string(T * dx + T * dy) + " > " +
                    std::to_string(kOracleSizeCap) + ")");
    }

    // X = m + G e with e = (u, w_2, ..., w_T) independent blocks.
    std::vector<Matrix> F(static_cast<std::size_t>(T));
    for (Eigen::Index k = 1; k < T; ++k) {
        F[static_cast<std::size_t>(k)] = step_matrix(params.A, series.delta(static_cast<std::size_t>(k)));
    }

    Vector mX(T * dx);
    mX.segment(0, dx) = params.mu;
    for (Eigen::Index k = 1; k < T; ++k) {
        mX.segment(k * dx, dx) = F[static_cast<std::size_t>(k)] * mX.segment((k - 1) * dx, dx);
    }

    Matrix G = Matrix::Zero(T * dx, T * dx);
    for (Eigen::Index j = 0; j < T; ++j) {
        Matrix block = Matrix::Identity(dx, dx);
        G.block(j * dx, j * dx, dx, dx) = block;
        for (Eigen::Index i = j + 1; i < T; ++i) {
            block = F[static_cast<std::size_t>(i)] * block;
            G.block(i * dx, j * dx, dx, dx) = block;
        }
    }

    Matrix D = Matrix::Zero(T * dx, T * dx);
    D.block(0, 0, dx, dx) = params.P;
    for (Eigen::Index k = 1; k < T; ++k) {
        D.block(k * dx, k * dx, dx, dx) = series.delta(static_cast<std::size_t>(k)) * params.Gamma;
    }
    const Matrix covX = G * D * G.transpose();

    Matrix H = Matrix::Zero(T * dy, T * dx);
    Matrix R = Matrix::Zero(T * dy, T * dy);
    Vector Y(T * dy);
    for (Eigen::Index k = 0; k < T; ++k) {
        H.block(k * dy, k * dx, dy, dx) = params.C;
        R.block(k * dy, k * dy, dy, dy) = params.Sigma / series.delta(static_cast<std::size_t>(k));
        Y.segment(k * dy, dy) = series.observations.col(k);
    }

    const Matrix covXY = covX * H.transpose();
    const Matrix SY = linalg::symmetrized(H * covXY + R);
    const Eigen::LDLT<Matrix> ldlt(SY);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
        throw InferenceError("joint observation covariance is not positive definite");
    }
    const Vector resid = Y - H * mX;
    const Vector alpha = ldlt.solve(resid);
    const double logdet = ldlt.vectorD().array().log().sum();

    OracleResult out;
    out.log_likelihood = -0.5 * (static_cast<double>(T * dy) * linalg::kLog2Pi + logdet + resid.dot(alpha));
    const Vector cond = mX + covXY * alpha;
    out.smoothed_means.reserve(static_cast<std::size_t>(T));
    for (Eigen::Index k = 0; k < T; ++k) out.smoothed_means.emplace_back(cond.segment(k * dx, dx));
    return out;
}

}  // namespace vista
