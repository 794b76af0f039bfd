#pragma once

// Dimension-templated filter, smoother and moment kernels. The public
// functions and the E-step dispatch to a fixed-size instantiation for the
// 7-emotion case and to the dynamic one otherwise; both run the same
// arithmetic.

#include "vista/em.hpp"
#include "vista/lgssm.hpp"
#include "vista/linalg.hpp"

#include <string>
#include <vector>

namespace vista::detail {

inline constexpr double kInnovationJitter = 1e-10;
inline constexpr double kMaxCondition = 1e12;

inline void check_compatible(const TimeSeries& series, const ClusterParameters& params) {
    check_dimensions(params);
    if (series.observations.rows() != params.obs_dim()) {
        throw DimensionError("series dimension " + std::to_string(series.observations.rows()) +
                             " does not match C rows " + std::to_string(params.obs_dim()));
    }
    if (static_cast<std::size_t>(series.observations.cols()) != series.timestamps.size()) {
        throw DimensionError("observation count does not match timestamp count");
    }
    if (series.timestamps.empty()) throw DimensionError("empty series");
    for (std::size_t k = 1; k < series.size(); ++k) {
        if (!(series.timestamps[k] > series.timestamps[k - 1])) {
            throw DimensionError("timestamps must be strictly increasing (step " + std::to_string(k) + ")");
        }
    }
}

/// Calls fn.template operator()<DX, DY>() with compile-time sizes when the
/// model has the canonical emotion shape.
template <class Fn>
decltype(auto) dispatch(Eigen::Index dx, Eigen::Index dy, Fn&& fn) {
    constexpr auto n = static_cast<Eigen::Index>(kNumEmotions);
    if (dx == n && dy == n) return fn.template operator()<static_cast<int>(kNumEmotions), static_cast<int>(kNumEmotions)>();
    return fn.template operator()<Eigen::Dynamic, Eigen::Dynamic>();
}

template <int DX, int DY>
struct Kernel {
    using Latent = Eigen::Matrix<double, DX, 1>;
    using LatentCov = Eigen::Matrix<double, DX, DX>;
    using Obs = Eigen::Matrix<double, DY, 1>;
    using ObsCov = Eigen::Matrix<double, DY, DY>;
    using ObsLatent = Eigen::Matrix<double, DY, DX>;
    using LatentObs = Eigen::Matrix<double, DX, DY>;

    struct Params {
        Latent mu;
        LatentCov A, P, Gamma;
        ObsLatent C;
        ObsCov Sigma;

        explicit Params(const ClusterParameters& p)
            : mu(p.mu), A(p.A), P(p.P), Gamma(p.Gamma), C(p.C), Sigma(p.Sigma) {}
        Eigen::Index dx() const { return mu.size(); }
    };

    struct Trajectory {
        std::vector<Latent> pred_mean, filt_mean, smooth_mean;
        std::vector<LatentCov> pred_cov, filt_cov, smooth_cov, cross;
        double log_likelihood = 0.0;
    };

    struct Moments {
        Latent first_mean;
        LatentCov first_outer, incr_prev, prev_prev_delta, incr_incr_per_delta, latent_latent_delta;
        ObsLatent obs_latent_delta;
        ObsCov obs_obs_delta;
    };

    template <class M>
    static void symmetrize(M& m) {
        m = (0.5 * (m + m.transpose())).eval();
    }

    static LatentCov step(const LatentCov& A, double delta) {
        LatentCov F = delta * A;
        F.diagonal().array() += 1.0;
        return F;
    }

    static void forward(const TimeSeries& series, const Params& p, Trajectory& t) {
        const std::size_t steps = series.size();
        const Eigen::Index dx = p.dx();
        const Eigen::Index dy = p.C.rows();
        const LatentCov eye = LatentCov::Identity(dx, dx);
        t.pred_mean.resize(steps);
        t.pred_cov.resize(steps);
        t.filt_mean.resize(steps);
        t.filt_cov.resize(steps);
        t.log_likelihood = 0.0;

        Latent mean = p.mu;
        LatentCov cov = p.P;
        for (std::size_t k = 0; k < steps; ++k) {
            const double delta = series.delta(k);
            if (k > 0) {
                const LatentCov F = step(p.A, delta);
                mean = F * mean;
                cov = F * cov * F.transpose() + delta * p.Gamma;
            }
            symmetrize(cov);
            t.pred_mean[k] = mean;
            t.pred_cov[k] = cov;

            const ObsCov R = p.Sigma / delta;
            ObsCov S = p.C * cov * p.C.transpose() + R;
            symmetrize(S);
            auto llt = linalg::robust_llt(S, kInnovationJitter);
            if (!llt) {
                throw InferenceError("innovation covariance is not positive definite", static_cast<std::ptrdiff_t>(k));
            }
            if (llt->rcond() < 1.0 / kMaxCondition) {
                throw InferenceError("innovation covariance is numerically singular", static_cast<std::ptrdiff_t>(k));
            }

            const Obs innovation = series.observations.col(static_cast<Eigen::Index>(k)) - p.C * mean;
            // K = cov C^T S^{-1}, computed as (S^{-1} C cov)^T since S and cov are symmetric.
            const LatentObs gain = llt->solve(p.C * cov).transpose();
            const Obs whitened = llt->matrixL().solve(innovation);
            t.log_likelihood += -0.5 * (static_cast<double>(dy) * linalg::kLog2Pi + linalg::log_det(*llt) +
                                        whitened.squaredNorm());

            mean += gain * innovation;
            const LatentCov IKC = eye - gain * p.C;
            cov = IKC * cov * IKC.transpose() + gain * R * gain.transpose();
            symmetrize(cov);
            t.filt_mean[k] = mean;
            t.filt_cov[k] = cov;
        }
    }

    static void backward(const TimeSeries& series, const Params& p, Trajectory& t) {
        const std::size_t steps = series.size();
        t.smooth_mean = t.filt_mean;
        t.smooth_cov = t.filt_cov;
        t.cross.resize(steps > 0 ? steps - 1 : 0);

        for (std::size_t k = steps - 1; k-- > 0;) {
            const LatentCov F = step(p.A, series.delta(k + 1));
            const LatentCov& Pf = t.filt_cov[k];
            const LatentCov& Ppred = t.pred_cov[k + 1];
            // J = Pf F^T Ppred^{-1} = (Ppred^{-1} F Pf)^T.
            LatentCov J;
            Eigen::LLT<LatentCov> llt(Ppred);
            if (llt.info() == Eigen::Success) {
                J = llt.solve(F * Pf).transpose();
            } else {
                const Matrix pinv = Matrix(Ppred).completeOrthogonalDecomposition().pseudoInverse();
                J = Pf * F.transpose() * pinv;
            }

            t.smooth_mean[k] = t.filt_mean[k] + J * (t.smooth_mean[k + 1] - t.pred_mean[k + 1]);
            LatentCov Ps = Pf + J * (t.smooth_cov[k + 1] - Ppred) * J.transpose();
            symmetrize(Ps);
            t.smooth_cov[k] = Ps;
            t.cross[k] = t.smooth_cov[k + 1] * J.transpose();
        }
    }

    static Moments moments(const TimeSeries& series, const std::vector<Latent>& means,
                           const std::vector<LatentCov>& covs, const std::vector<LatentCov>& cross) {
        const std::size_t T = series.size();
        const Eigen::Index dx = means.front().size();
        const Eigen::Index dy = series.dim();
        Moments s;
        s.first_mean = means[0];
        s.first_outer = covs[0] + means[0] * means[0].transpose();
        s.incr_prev = LatentCov::Zero(dx, dx);
        s.prev_prev_delta = LatentCov::Zero(dx, dx);
        s.incr_incr_per_delta = LatentCov::Zero(dx, dx);
        s.latent_latent_delta = LatentCov::Zero(dx, dx);
        s.obs_latent_delta = ObsLatent::Zero(dy, dx);
        s.obs_obs_delta = ObsCov::Zero(dy, dy);

        for (std::size_t k = 0; k < T; ++k) {
            const double delta = series.delta(k);
            const Latent& m = means[k];
            const LatentCov& P = covs[k];
            const Obs y = series.observations.col(static_cast<Eigen::Index>(k));

            s.obs_latent_delta.noalias() += delta * y * m.transpose();
            s.latent_latent_delta.noalias() += delta * (P + m * m.transpose());
            s.obs_obs_delta.noalias() += delta * y * y.transpose();

            if (k == 0) continue;
            const Latent& mp = means[k - 1];
            const LatentCov& Pp = covs[k - 1];
            const LatentCov& c = cross[k - 1];  // Cov(x_k, x_{k-1})
            const Latent incr = m - mp;
            // Increment moments are formed from covariances first to avoid
            // cancellation between large raw second moments.
            const LatentCov incr_cov = P + Pp - c - c.transpose();
            s.incr_prev.noalias() += (c - Pp) + incr * mp.transpose();
            s.prev_prev_delta.noalias() += delta * (Pp + mp * mp.transpose());
            s.incr_incr_per_delta.noalias() += (incr_cov + incr * incr.transpose()) / delta;
        }
        return s;
    }

    static SufficientStats to_stats(const Moments& m, std::size_t T, double weight) {
        SufficientStats s;
        s.weight = weight;
        s.transitions = weight * static_cast<double>(T - 1);
        s.observations = weight * static_cast<double>(T);
        s.first_mean = weight * m.first_mean;
        s.first_outer = weight * m.first_outer;
        s.incr_prev = weight * m.incr_prev;
        s.prev_prev_delta = weight * m.prev_prev_delta;
        s.incr_incr_per_delta = weight * m.incr_incr_per_delta;
        s.obs_latent_delta = weight * m.obs_latent_delta;
        s.latent_latent_delta = weight * m.latent_latent_delta;
        s.obs_obs_delta = weight * m.obs_obs_delta;
        return s;
    }

    template <class To, class From>
    static std::vector<To> convert(const std::vector<From>& v) {
        return std::vector<To>(v.begin(), v.end());
    }
};

}  // namespace vista::detail
