#include "vista/em.hpp"

#include "vista/linalg.hpp"
#include "vista/parallel.hpp"

#include "lgssm_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace vista {

namespace {

constexpr double kNormalJitter = 1e-8;
constexpr double kMonotoneSlack = 1e-6;

// X * N^{-1} for symmetric positive-definite N.
Matrix solve_right(const Matrix& X, const Matrix& N, const char* what) {
    auto llt = linalg::robust_llt(linalg::symmetrized(N), kNormalJitter);
    if (!llt) throw InferenceError(std::string("singular normal matrix in M-step update of ") + what);
    return llt->solve(X.transpose()).transpose();
}

std::mt19937_64 seeded_stream(std::uint64_t seed, std::size_t index, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), tag};
    return std::mt19937_64(seq);
}

// Lloyd's algorithm from k-means++ seeding; empty clusters keep their centroid.
std::vector<int> kmeans(const std::vector<Vector>& points, std::size_t k, std::mt19937_64 rng) {
    const std::size_t n = points.size();
    std::vector<Vector> centers;
    centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> dist(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, (points[i] - c).squaredNorm());
            dist[i] = best;
            total += best;
        }
        if (!(total > 0.0)) {
            centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
            continue;
        }
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = 0;
        for (; pick + 1 < n; ++pick) {
            if (u < dist[pick]) break;
            u -= dist[pick];
        }
        centers.push_back(points[pick]);
    }

    std::vector<int> labels(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (points[i] - centers[0]).squaredNorm();
            for (std::size_t c = 1; c < k; ++c) {
                const double d = (points[i] - centers[c]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        for (std::size_t c = 0; c < k; ++c) {
            Vector sum = Vector::Zero(centers[c].size());
            double count = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] == static_cast<int>(c)) {
                    sum += points[i];
                    count += 1.0;
                }
            }
            if (count > 0.0) centers[c] = sum / count;
        }
    }
    return labels;
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void FitConfig::validate() const {
    if (clusters < 1) throw Error("cluster count must be >= 1");
    if (latent_dim < 1) throw Error("latent dimension must be >= 1");
    if (!(tol > 0.0)) throw Error("tolerance must be > 0");
    if (max_iters < 0) throw Error("max_iters must be >= 0");
    if (!(min_weight >= 0.0 && min_weight * clusters < 1.0)) throw Error("min_weight out of range");
}

// -----------------------------------------------------------------------------
// Sufficient statistics
// -----------------------------------------------------------------------------

SufficientStats SufficientStats::zero(Eigen::Index dx, Eigen::Index dy) {
    SufficientStats s;
    s.first_mean = Vector::Zero(dx);
    s.first_outer = Matrix::Zero(dx, dx);
    s.incr_prev = Matrix::Zero(dx, dx);
    s.prev_prev_delta = Matrix::Zero(dx, dx);
    s.incr_incr_per_delta = Matrix::Zero(dx, dx);
    s.obs_latent_delta = Matrix::Zero(dy, dx);
    s.latent_latent_delta = Matrix::Zero(dx, dx);
    s.obs_obs_delta = Matrix::Zero(dy, dy);
    return s;
}

SufficientStats& SufficientStats::operator+=(const SufficientStats& o) {
    weight += o.weight;
    transitions += o.transitions;
    observations += o.observations;
    first_mean += o.first_mean;
    first_outer += o.first_outer;
    incr_prev += o.incr_prev;
    prev_prev_delta += o.prev_prev_delta;
    incr_incr_per_delta += o.incr_incr_per_delta;
    obs_latent_delta += o.obs_latent_delta;
    latent_latent_delta += o.latent_latent_delta;
    obs_obs_delta += o.obs_obs_delta;
    return *this;
}

SufficientStats& SufficientStats::operator*=(double r) {
    weight *= r;
    transitions *= r;
    observations *= r;
    first_mean *= r;
    first_outer *= r;
    incr_prev *= r;
    prev_prev_delta *= r;
    incr_incr_per_delta *= r;
    obs_latent_delta *= r;
    latent_latent_delta *= r;
    obs_obs_delta *= r;
    return *this;
}

SufficientStats collect_statistics(const TimeSeries& series, const SmootherResult& sm) {
    if (sm.smoothed_means.size() != series.size() || sm.smoothed_covs.size() != series.size() ||
        sm.lag_one_crosscovs.size() + 1 != series.size()) {
        throw DimensionError("smoother result length does not match series");
    }
    using K = detail::Kernel<Eigen::Dynamic, Eigen::Dynamic>;
    return K::to_stats(K::moments(series, sm.smoothed_means, sm.smoothed_covs, sm.lag_one_crosscovs), series.size(),
                       1.0);
}

// -----------------------------------------------------------------------------
// Initialization
// -----------------------------------------------------------------------------

FittedMixture initialize_identity(std::span<const TimeSeries> data, const FitConfig& config) {
    config.validate();
    if (data.empty()) throw DataError("cannot initialize from an empty data set");
    const Eigen::Index dy = data.front().dim();
    const Eigen::Index dx = config.latent_dim;
    for (const auto& s : data) {
        if (s.dim() != dy) throw DimensionError("series '" + s.patient_id + "' has a different observation dimension");
        if (s.size() == 0) throw DataError("series '" + s.patient_id + "' is empty");
    }

    Vector first_mean = Vector::Zero(dy);
    for (const auto& s : data) first_mean += s.observations.col(0);
    first_mean /= static_cast<double>(data.size());

    Vector mean = Vector::Zero(dy);
    double count = 0.0;
    for (const auto& s : data) {
        mean += s.observations.rowwise().sum();
        count += static_cast<double>(s.size());
    }
    mean /= count;
    Vector var = Vector::Zero(dy);
    for (const auto& s : data) var += (s.observations.colwise() - mean).rowwise().squaredNorm();
    var /= std::max(1.0, count - 1.0);
    var = var.cwiseMax(1e-8);

    ClusterParameters base;
    base.C = Matrix::Identity(dy, dx);
    base.A = Matrix::Zero(dx, dx);
    base.mu = base.C.transpose() * first_mean;
    Vector latent_var = Vector::Constant(dx, var.mean());
    latent_var.head(std::min(dx, dy)) = var.head(std::min(dx, dy));
    base.P = latent_var.asDiagonal();
    base.Gamma = latent_var.asDiagonal();
    base.Sigma = var.asDiagonal();

    FittedMixture model;
    const auto M = static_cast<std::size_t>(config.clusters);
    model.clusters.assign(M, base);
    model.weights.assign(M, 1.0 / static_cast<double>(M));
    model.frozen.assign(M, false);
    if (M == 1) return model;

    if (config.init == InitStrategy::Perturbed) {
        const Vector scale = base.mu.cwiseAbs().cwiseMax(latent_var.cwiseSqrt());
        for (std::size_t l = 0; l < M; ++l) {
            std::mt19937_64 rng = seeded_stream(config.seed, l, 0x1d3a7u);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (Eigen::Index j = 0; j < dx; ++j) {
                model.clusters[l].mu[j] += config.perturbation * scale[j] * normal(rng);
            }
        }
        return model;
    }

    std::vector<Vector> features;
    features.reserve(data.size());
    for (const auto& s : data) features.emplace_back(s.observations.rowwise().mean());
    const std::vector<int> part = kmeans(features, M, seeded_stream(config.seed, 0, 0x6b6du));
    for (std::size_t l = 0; l < M; ++l) {
        Vector sum = Vector::Zero(dy);
        double n = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (part[i] != static_cast<int>(l)) continue;
            sum += data[i].observations.col(0);
            n += 1.0;
        }
        if (n > 0.0) model.clusters[l].mu = base.C.transpose() * (sum / n);
    }
    return model;
}

// -----------------------------------------------------------------------------
// E-step
// -----------------------------------------------------------------------------

EStepResult e_step(std::span<const TimeSeries> data, const FittedMixture& model, std::size_t threads,
                   bool keep_smoothers) {
    const std::size_t N = data.size();
    const std::size_t M = model.num_clusters();
    if (M == 0) throw Error("model has no clusters");
    if (model.weights.size() != M) throw DimensionError("weights and clusters differ in length");
    const Eigen::Index dx = model.clusters.front().latent_dim();
    const Eigen::Index dy = model.clusters.front().obs_dim();

    std::vector<double> log_weights(M);
    for (std::size_t l = 0; l < M; ++l) log_weights[l] = std::log(model.weights[l]);

    EStepResult out;
    out.responsibilities.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
    out.log_likelihoods.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
    if (keep_smoothers) out.smoothers.assign(N, std::vector<SmootherResult>(M));

    // per_series[l][i]: responsibility-weighted statistics of series i for cluster l.
    std::vector<std::vector<SufficientStats>> per_series(M, std::vector<SufficientStats>(N));
    std::vector<double> series_loglik(N);
    std::vector<char> underflow(N, 0);

    detail::dispatch(dx, dy, [&]<int DX, int DY>() {
        using K = detail::Kernel<DX, DY>;
        std::vector<typename K::Params> params;
        params.reserve(M);
        for (const auto& c : model.clusters) {
            if (c.latent_dim() != dx || c.obs_dim() != dy) throw DimensionError("clusters differ in dimensions");
            params.emplace_back(c);
        }
        for (const auto& s : data) {
            for (const auto& c : model.clusters) detail::check_compatible(s, c);
        }

        parallel_for(N, threads, [&](std::size_t i) {
            const auto row = static_cast<Eigen::Index>(i);
            const TimeSeries& series = data[i];
            Vector joint(static_cast<Eigen::Index>(M));
            std::vector<typename K::Moments> moments;
            moments.reserve(M);
            typename K::Trajectory t;
            for (std::size_t l = 0; l < M; ++l) {
                const auto col = static_cast<Eigen::Index>(l);
                K::forward(series, params[l], t);
                K::backward(series, params[l], t);
                out.log_likelihoods(row, col) = t.log_likelihood;
                joint[col] = log_weights[l] + t.log_likelihood;
                moments.push_back(K::moments(series, t.smooth_mean, t.smooth_cov, t.cross));
                if (keep_smoothers) {
                    SmootherResult& sm = out.smoothers[i][l];
                    sm.smoothed_means = K::template convert<Vector>(t.smooth_mean);
                    sm.smoothed_covs = K::template convert<Matrix>(t.smooth_cov);
                    sm.lag_one_crosscovs = K::template convert<Matrix>(t.cross);
                }
            }
            const double lse = log_sum_exp(joint);
            series_loglik[i] = lse;
            if (!std::isfinite(lse)) {
                underflow[i] = 1;
                out.responsibilities.row(row).setConstant(1.0 / static_cast<double>(M));
            } else {
                out.responsibilities.row(row) = (joint.array() - lse).exp().transpose();
                out.responsibilities.row(row) /= out.responsibilities.row(row).sum();
            }
            for (std::size_t l = 0; l < M; ++l) {
                per_series[l][i] =
                    K::to_stats(moments[l], series.size(), out.responsibilities(row, static_cast<Eigen::Index>(l)));
            }
        });
    });

    for (std::size_t i = 0; i < N; ++i) {
        if (underflow[i]) {
            out.warnings.push_back("likelihood underflow for series '" + data[i].patient_id +
                                   "'; responsibilities set uniform");
        }
    }

    auto add = [](SufficientStats& a, const SufficientStats& b) { a += b; };
    auto add_double = [](double& a, double b) { a += b; };
    out.stats.reserve(M);
    for (std::size_t l = 0; l < M; ++l) {
        out.stats.push_back(N == 0 ? SufficientStats::zero(dx, dy) : tree_reduce(per_series[l], 0, N, add));
    }
    out.total_log_likelihood = N == 0 ? 0.0 : tree_reduce(series_loglik, 0, N, add_double);
    return out;
}

// -----------------------------------------------------------------------------
// M-step
// -----------------------------------------------------------------------------

FittedMixture m_step(const std::vector<SufficientStats>& stats, const FittedMixture& current, const FitConfig& config) {
    const std::size_t M = current.num_clusters();
    if (stats.size() != M) throw DimensionError("statistics count does not match cluster count");

    FittedMixture next = current;
    if (next.frozen.size() != M) next.frozen.assign(M, false);

    double total = 0.0;
    for (const auto& s : stats) total += s.weight;
    if (!(total > 0.0)) throw InferenceError("M-step received zero total responsibility");

    std::vector<double> weights(M);
    for (std::size_t l = 0; l < M; ++l) {
        const double raw = stats[l].weight / total;
        if (M > 1 && raw <= config.min_weight && !next.frozen[l]) {
            next.frozen[l] = true;
            next.warnings.push_back("cluster " + std::to_string(l) + " reached the minimum weight and was frozen");
        }
        weights[l] = std::max(raw, config.min_weight);
    }
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    for (std::size_t l = 0; l < M; ++l) next.weights[l] = weights[l] / wsum;

    for (std::size_t l = 0; l < M; ++l) {
        if (next.frozen[l]) continue;
        const SufficientStats& s = stats[l];
        ClusterParameters& p = next.clusters[l];

        p.mu = s.first_mean / s.weight;
        p.P = linalg::symmetrized(s.first_outer / s.weight - p.mu * p.mu.transpose());

        if (s.transitions > 0.0) {
            p.A = solve_right(s.incr_prev, s.prev_prev_delta, "A");
            Matrix G = s.incr_incr_per_delta - p.A * s.incr_prev.transpose() - s.incr_prev * p.A.transpose() +
                       p.A * s.prev_prev_delta * p.A.transpose();
            p.Gamma = linalg::symmetrized(G / s.transitions);
        }

        p.C = solve_right(s.obs_latent_delta, s.latent_latent_delta, "C");
        Matrix R = s.obs_obs_delta - p.C * s.obs_latent_delta.transpose() - s.obs_latent_delta * p.C.transpose() +
                   p.C * s.latent_latent_delta * p.C.transpose();
        p.Sigma = linalg::symmetrized(R / s.observations);
    }
    return next;
}

// -----------------------------------------------------------------------------
// Driver
// -----------------------------------------------------------------------------

std::vector<int> hard_labels(const Matrix& resp) {
    std::vector<int> labels(static_cast<std::size_t>(resp.rows()));
    for (Eigen::Index i = 0; i < resp.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index l = 1; l < resp.cols(); ++l) {
            if (resp(i, l) > resp(i, best)) best = l;
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

FittedMixture fit(std::span<const TimeSeries> data, const FitConfig& config) {
    return fit(data, config, initialize_identity(data, config));
}

FittedMixture fit(std::span<const TimeSeries> data, const FitConfig& config, FittedMixture model) {
    config.validate();
    if (data.empty()) throw DataError("cannot fit an empty data set");
    if (model.frozen.size() != model.num_clusters()) model.frozen.assign(model.num_clusters(), false);
    model.loglik_trace.clear();
    model.converged = false;
    model.iterations = 0;

    for (int iter = 0;; ++iter) {
        EStepResult e = e_step(data, model, config.threads);
        for (auto& w : e.warnings) model.warnings.push_back(std::move(w));
        const double ll = e.total_log_likelihood;
        if (!model.loglik_trace.empty()) {
            const double prev = model.loglik_trace.back();
            if (ll < prev - kMonotoneSlack) {
                std::ostringstream msg;
                msg << "log-likelihood decreased by " << (prev - ll) << " at iteration " << iter;
                model.warnings.push_back(msg.str());
            }
        }
        model.loglik_trace.push_back(ll);
        model.responsibilities = std::move(e.responsibilities);
        model.labels = hard_labels(model.responsibilities);

        if (model.loglik_trace.size() > 1) {
            const double prev = model.loglik_trace[model.loglik_trace.size() - 2];
            if (std::abs(ll - prev) / (1.0 + std::abs(ll)) < config.tol) {
                model.converged = true;
                break;
            }
        }
        if (iter >= config.max_iters) break;

        FittedMixture next = m_step(e.stats, model, config);
        next.responsibilities = std::move(model.responsibilities);
        next.labels = std::move(model.labels);
        next.loglik_trace = std::move(model.loglik_trace);
        model = std::move(next);
        model.iterations = iter + 1;
    }
    return model;
}

Assignment assign(std::span<const TimeSeries> data, const FittedMixture& model, std::size_t threads) {
    EStepResult e = e_step(data, model, threads);
    Assignment out;
    out.labels = hard_labels(e.responsibilities);
    out.responsibilities = std::move(e.responsibilities);
    out.total_log_likelihood = e.total_log_likelihood;
    return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw DimensionError("labelings differ in length");
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto choose2 = [](double x) { return 0.5 * x * (x - 1.0); };
    double sum_joint = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [k, v] : joint) sum_joint += choose2(v);
    for (const auto& [k, v] : rows) sum_rows += choose2(v);
    for (const auto& [k, v] : cols) sum_cols += choose2(v);
    const double expected = sum_rows * sum_cols / choose2(n);
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;
    return (sum_joint - expected) / (max_index - expected);
}

}  // namespace vista
