#include "support.hpp"
#include "vista/lgssm.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vista;
using vista::test::random_params;
using vista::test::random_series;

namespace {

// Posterior covariance of the stacked latents given all observations, from
// the explicit prior covariance of (x_1..x_T) and the observation model.
Matrix dense_posterior_cov(const TimeSeries& s, const ClusterParameters& p) {
    const Eigen::Index dx = p.latent_dim();
    const Eigen::Index dy = p.obs_dim();
    const auto T = static_cast<Eigen::Index>(s.size());
    std::vector<Matrix> marg(static_cast<std::size_t>(T));
    marg[0] = p.P;
    for (Eigen::Index k = 1; k < T; ++k) {
        const double d = s.delta(static_cast<std::size_t>(k));
        const Matrix F = Matrix::Identity(dx, dx) + d * p.A;
        marg[static_cast<std::size_t>(k)] = F * marg[static_cast<std::size_t>(k - 1)] * F.transpose() + d * p.Gamma;
    }
    Matrix Kxx = Matrix::Zero(T * dx, T * dx);
    for (Eigen::Index j = 0; j < T; ++j) {
        Matrix phi = Matrix::Identity(dx, dx);
        for (Eigen::Index i = j; i < T; ++i) {
            if (i > j) phi = (Matrix::Identity(dx, dx) + s.delta(static_cast<std::size_t>(i)) * p.A) * phi;
            const Matrix c = phi * marg[static_cast<std::size_t>(j)];
            Kxx.block(i * dx, j * dx, dx, dx) = c;
            Kxx.block(j * dx, i * dx, dx, dx) = c.transpose();
        }
    }
    Matrix H = Matrix::Zero(T * dy, T * dx);
    Matrix R = Matrix::Zero(T * dy, T * dy);
    for (Eigen::Index k = 0; k < T; ++k) {
        H.block(k * dy, k * dx, dy, dx) = p.C;
        R.block(k * dy, k * dy, dy, dy) = p.Sigma / s.delta(static_cast<std::size_t>(k));
    }
    const Matrix Kyy = H * Kxx * H.transpose() + R;
    const Matrix Kxy = Kxx * H.transpose();
    return Kxx - Kxy * Kyy.ldlt().solve(Kxy.transpose());
}

double gaussian_logpdf(const Vector& y, const Vector& m, const Matrix& S) {
    Eigen::LLT<Matrix> llt(S);
    const Vector z = llt.matrixL().solve(y - m);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < S.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

ClusterParameters scalar(double mu, double a, double c, double p, double sigma, double gamma) {
    ClusterParameters out;
    out.mu = Vector::Constant(1, mu);
    out.A = Matrix::Constant(1, 1, a);
    out.C = Matrix::Constant(1, 1, c);
    out.P = Matrix::Constant(1, 1, p);
    out.Sigma = Matrix::Constant(1, 1, sigma);
    out.Gamma = Matrix::Constant(1, 1, gamma);
    return out;
}

}  // namespace

TEST_CASE("filter and smoother agree with the dense joint Gaussian") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const Eigen::Index dx = 1 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index dy = 1 + static_cast<Eigen::Index>(rng() % 4);
        const std::size_t T = 1 + rng() % 6;
        const ClusterParameters p = random_params(rng, dx, dy);
        const TimeSeries s = random_series(rng, dy, T);

        const FilterResult f = kalman_filter(s, p);
        const SmootherResult sm = rts_smoother(s, p, f);
        const OracleResult o = joint_gaussian_oracle(s, p);
        CAPTURE(seed);
        CHECK(std::abs(f.log_likelihood - o.log_likelihood) <= 1e-8 * std::max(1.0, std::abs(o.log_likelihood)));
        for (std::size_t k = 0; k < T; ++k) {
            CHECK((sm.smoothed_means[k] - o.smoothed_means[k]).cwiseAbs().maxCoeff() <= 1e-7);
        }
    }
}

TEST_CASE("fixed-size emotion path agrees with the dense joint Gaussian") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const std::size_t T = 2 + rng() % 12;
        const ClusterParameters p = random_params(rng, 7, 7);
        const TimeSeries s = random_series(rng, 7, T);
        const FilterResult f = kalman_filter(s, p);
        const SmootherResult sm = rts_smoother(s, p, f);
        const OracleResult o = joint_gaussian_oracle(s, p);
        CHECK(std::abs(f.log_likelihood - o.log_likelihood) <= 1e-8 * std::max(1.0, std::abs(o.log_likelihood)));
        for (std::size_t k = 0; k < T; ++k) {
            CHECK((sm.smoothed_means[k] - o.smoothed_means[k]).cwiseAbs().maxCoeff() <= 1e-7);
        }
    }
}

TEST_CASE("smoothed and lag-one covariances match the dense posterior") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(500 + seed);
        const Eigen::Index dx = 1 + static_cast<Eigen::Index>(rng() % 3);
        const Eigen::Index dy = 1 + static_cast<Eigen::Index>(rng() % 3);
        const std::size_t T = 2 + rng() % 5;
        const ClusterParameters p = random_params(rng, dx, dy);
        const TimeSeries s = random_series(rng, dy, T);
        const SmootherResult sm = rts_smoother(s, p, kalman_filter(s, p));
        const Matrix post = dense_posterior_cov(s, p);
        for (std::size_t k = 0; k < T; ++k) {
            const auto i = static_cast<Eigen::Index>(k) * dx;
            CHECK((sm.smoothed_covs[k] - post.block(i, i, dx, dx)).cwiseAbs().maxCoeff() <= 1e-8);
            if (k + 1 < T) {
                const Matrix expected = post.block(i + dx, i, dx, dx);
                CHECK((sm.lag_one_crosscovs[k] - expected).cwiseAbs().maxCoeff() <= 1e-8);
            }
        }
    }
}

TEST_CASE("scalar single-step example") {
    TimeSeries s;
    s.timestamps = {0.0};
    s.observations = Matrix::Constant(1, 1, 2.0);
    const FilterResult f = kalman_filter(s, scalar(0.0, 0.0, 1.0, 1.0, 1.0, 1.0));
    CHECK(f.filtered_means[0](0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.filtered_covs[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    const double expected = -0.5 * std::log(2.0 * std::numbers::pi * 2.0) - 1.0;
    CHECK(f.log_likelihood == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single observation has the closed-form marginal") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const ClusterParameters p = random_params(rng, 3, 2);
        TimeSeries s = random_series(rng, 2, 1);
        const Matrix S = p.C * p.P * p.C.transpose() + p.Sigma;
        const double expected = gaussian_logpdf(s.observations.col(0), p.C * p.mu, S);
        CHECK(kalman_filter(s, p).log_likelihood == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("covariances stay symmetric") {
    std::mt19937_64 rng(11);
    const ClusterParameters p = random_params(rng, 7, 7);
    const TimeSeries s = random_series(rng, 7, 40);
    const FilterResult f = kalman_filter(s, p);
    const SmootherResult sm = rts_smoother(s, p, f);
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK((f.filtered_covs[k] - f.filtered_covs[k].transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((sm.smoothed_covs[k] - sm.smoothed_covs[k].transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(sm.smoothed_covs[k]).eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("mismatched dimensions raise DimensionError") {
    std::mt19937_64 rng(3);
    const ClusterParameters p = random_params(rng, 2, 3);
    CHECK_THROWS_AS(kalman_filter(random_series(rng, 4, 3), p), DimensionError);
    TimeSeries bad = random_series(rng, 3, 3);
    bad.timestamps.pop_back();
    CHECK_THROWS_AS(kalman_filter(bad, p), DimensionError);
}

TEST_CASE("indefinite innovation names the failing step") {
    ClusterParameters p = scalar(0.0, 0.0, 1.0, 1.0, 0.1, -10.0);
    TimeSeries s;
    s.timestamps = {0.0, 1.0, 2.0};
    s.observations = Matrix::Zero(1, 3);
    try {
        kalman_filter(s, p);
        FAIL("expected InferenceError");
    } catch (const InferenceError& e) {
        CHECK(e.step() == 1);
    }

    ClusterParameters singular;
    singular.mu = Vector::Zero(2);
    singular.A = Matrix::Zero(2, 2);
    singular.C = Matrix::Identity(2, 2);
    singular.P = Matrix::Identity(2, 2);
    singular.P(1, 1) = 1e-16;
    singular.Sigma = Matrix::Identity(2, 2) * 1e-16;
    singular.Sigma(0, 0) = 1.0;
    singular.Gamma = Matrix::Identity(2, 2);
    TimeSeries s2;
    s2.timestamps = {0.0};
    s2.observations = Matrix::Zero(2, 1);
    try {
        kalman_filter(s2, singular);
        FAIL("expected InferenceError");
    } catch (const InferenceError& e) {
        CHECK(e.step() == 0);
    }
}

TEST_CASE("noiseless rollout") {
    const std::vector<double> grid = {0.0, 0.5, 2.0, 2.25};
    ClusterParameters p = scalar(1.5, 0.0, 2.0, 1.0, 1.0, 1.0);
    Matrix y = noiseless_trajectory(p, grid);
    for (Eigen::Index k = 0; k < 4; ++k) CHECK(y(0, k) == 3.0);

    p.A(0, 0) = -0.5;
    y = noiseless_trajectory(p, grid);
    double x = 1.5;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (k > 0) x *= 1.0 - 0.5 * (grid[k] - grid[k - 1]);
        CHECK(y(0, static_cast<Eigen::Index>(k)) == doctest::Approx(2.0 * x).epsilon(1e-14));
    }

    ClusterParameters rot;
    rot.mu = Vector::Unit(2, 0);
    rot.A = Matrix{{0.0, -1.0}, {1.0, 0.0}};
    rot.C = Matrix::Identity(2, 2);
    rot.P = rot.Sigma = rot.Gamma = Matrix::Identity(2, 2);
    const std::vector<double> g = {0.0, 0.1, 0.3, 0.7};
    const Matrix out = noiseless_trajectory(rot, g);
    Vector state = rot.mu;
    for (std::size_t k = 1; k < g.size(); ++k) {
        const double d = g[k] - g[k - 1];
        state = Matrix{{1.0, -d}, {d, 1.0}} * state;
        CHECK((out.col(static_cast<Eigen::Index>(k)) - state).norm() <= 1e-14);
    }
}

TEST_CASE("rescaling time with matched parameters changes only the first-step density") {
    // With the unit first-step convention, Sigma rescaling also rescales the
    // first observation noise; P = 0 pins x_1 = mu so the remaining terms are
    // invariant and the difference is exactly the first-step density change.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(40 + seed);
        ClusterParameters p = random_params(rng, 3, 3);
        p.P = Matrix::Zero(3, 3);
        const TimeSeries s = random_series(rng, 3, 8);
        const double c = 0.25 + 3.0 * static_cast<double>(seed) / 20.0;

        ClusterParameters q = p;
        q.A = p.A / c;
        q.Gamma = p.Gamma / c;
        q.Sigma = p.Sigma * c;
        TimeSeries r = s;
        for (double& t : r.timestamps) t *= c;

        const Vector y1 = s.observations.col(0);
        const double base = kalman_filter(s, p).log_likelihood - gaussian_logpdf(y1, p.C * p.mu, p.Sigma);
        const double scaled = kalman_filter(r, q).log_likelihood - gaussian_logpdf(y1, q.C * q.mu, q.Sigma);
        CHECK(std::abs(base - scaled) <= 1e-8 * std::max(1.0, std::abs(base)));
    }
}

TEST_CASE("smoother rejects a filter from a different series") {
    std::mt19937_64 rng(5);
    const ClusterParameters p = random_params(rng, 2, 2);
    const TimeSeries a = random_series(rng, 2, 5);
    const TimeSeries b = random_series(rng, 2, 6);
    CHECK_THROWS_AS(rts_smoother(b, p, kalman_filter(a, p)), DimensionError);
}
