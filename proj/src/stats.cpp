#include "vista/stats.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <map>
#include <limits>
#include <numeric>

namespace vista::stats {

namespace {

struct Ranked {
    std::vector<double> ranks;  // pooled midranks, x first then y
    double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

Ranked pooled_midranks(std::span<const double> x, std::span<const double> y) {
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::size_t n = pooled.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });

    Ranked out;
    out.ranks.resize(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && pooled[idx[j]] == pooled[idx[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) out.ranks[idx[k]] = mid;
        const double t = static_cast<double>(j - i);
        out.tie_term += t * t * t - t;
        i = j;
    }
    return out;
}

void check_samples(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw Error("Mann-Whitney U needs two non-empty samples");
    for (double v : x) {
        if (std::isnan(v)) throw Error("Mann-Whitney U sample contains NaN");
    }
    for (double v : y) {
        if (std::isnan(v)) throw Error("Mann-Whitney U sample contains NaN");
    }
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double deviance(const Vector& eta, std::span<const double> y) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double yi = y[static_cast<std::size_t>(i)];
        d += yi * softplus(-eta[i]) + (1.0 - yi) * softplus(eta[i]);
    }
    return 2.0 * d;
}

Vector sigmoid(const Vector& eta) {
    Vector mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        mu[i] = eta[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-eta[i])) : std::exp(eta[i]) / (1.0 + std::exp(eta[i]));
    }
    return mu;
}

std::vector<std::size_t> aliased_columns(const Matrix& X) {
    std::vector<std::size_t> aliased;
    std::vector<Eigen::Index> kept;
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        Matrix sub(X.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
        for (std::size_t k = 0; k < kept.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = X.col(kept[k]);
        sub.col(sub.cols() - 1) = X.col(j);
        Eigen::ColPivHouseholderQR<Matrix> qr(sub);
        qr.setThreshold(1e-10 / scale);
        if (qr.rank() == sub.cols()) {
            kept.push_back(j);
        } else {
            aliased.push_back(static_cast<std::size_t>(j));
        }
    }
    return aliased;
}

}  // namespace

double normal_two_sided_p(double z) { return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0))); }

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
    check_samples(x, y);
    const Ranked r = pooled_midranks(x, y);
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    const double n = nx + ny;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rank_sum += r.ranks[i];

    MannWhitneyResult out;
    out.u_x = rank_sum - nx * (nx + 1.0) / 2.0;
    out.u_y = nx * ny - out.u_x;
    const double mean = nx * ny / 2.0;
    const double var = nx * ny / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
    if (!(var > 0.0)) {
        out.z = 0.0;
        out.p = 1.0;
        return out;
    }
    const double dev = out.u_x - mean;
    const double corrected = std::max(0.0, std::abs(dev) - 0.5);
    out.z = std::copysign(corrected / std::sqrt(var), dev);
    if (corrected == 0.0) out.z = 0.0;
    out.p = normal_two_sided_p(out.z);
    return out;
}

double mann_whitney_exact(std::span<const double> x, std::span<const double> y) {
    check_samples(x, y);
    const std::size_t n = x.size() + y.size();
    if (n > kExactSizeCap) {
        throw Error("exact Mann-Whitney enumeration is limited to " + std::to_string(kExactSizeCap) + " observations");
    }
    const Ranked r = pooled_midranks(x, y);
    const double nx = static_cast<double>(x.size());
    const double mean = nx * static_cast<double>(y.size()) / 2.0;
    const double offset = nx * (nx + 1.0) / 2.0;

    double observed = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) observed += r.ranks[i];
    const double observed_dev = std::abs(observed - offset - mean);

    std::uint64_t extreme = 0;
    std::uint64_t total = 0;
    const std::uint32_t limit = std::uint32_t{1} << n;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != x.size()) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::uint32_t{1} << i)) s += r.ranks[i];
        }
        ++total;
        // Rank sums are multiples of 0.5, so a small slack is exact.
        if (std::abs(s - offset - mean) >= observed_dev - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

std::vector<double> bonferroni(std::span<const double> p_values) {
    const double m = static_cast<double>(p_values.size());
    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("p-value outside [0, 1]");
        out.push_back(std::min(1.0, m * p));
    }
    return out;
}

Design build_design(std::size_t n_rows, const std::vector<NumericCovariate>& numeric,
                    const std::vector<CategoricalCovariate>& categorical) {
    for (const auto& c : numeric) {
        if (c.values.size() != n_rows) throw DimensionError("covariate '" + c.name + "' has the wrong length");
    }
    for (const auto& c : categorical) {
        if (c.values.size() != n_rows) throw DimensionError("covariate '" + c.name + "' has the wrong length");
    }

    Design d;
    for (std::size_t i = 0; i < n_rows; ++i) {
        bool complete = true;
        for (const auto& c : numeric) complete = complete && !std::isnan(c.values[i]);
        for (const auto& c : categorical) complete = complete && !c.values[i].empty();
        if (complete) d.rows.push_back(i);
    }
    d.dropped = n_rows - d.rows.size();

    struct Encoded {
        std::string name;
        std::vector<std::string> levels;  // non-reference, sorted
        const std::vector<std::string>* values;
    };
    std::vector<Encoded> encoded;
    for (const auto& c : categorical) {
        std::map<std::string, std::size_t> counts;
        for (std::size_t i : d.rows) ++counts[c.values[i]];
        std::string reference = c.reference;
        if (!counts.contains(reference)) {
            std::size_t best = 0;
            for (const auto& [level, count] : counts) {
                if (count > best) {
                    best = count;
                    reference = level;
                }
            }
        }
        Encoded e{c.name, {}, &c.values};
        for (const auto& [level, count] : counts) {
            if (level != reference) e.levels.push_back(level);
        }
        d.reference_levels.push_back(c.name + "=" + reference);
        encoded.push_back(std::move(e));
    }

    d.names.push_back("(Intercept)");
    for (const auto& c : numeric) d.names.push_back(c.name);
    for (const auto& e : encoded) {
        for (const auto& level : e.levels) d.names.push_back(e.name + "=" + level);
    }

    d.X.resize(static_cast<Eigen::Index>(d.rows.size()), static_cast<Eigen::Index>(d.names.size()));
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
        const std::size_t i = d.rows[r];
        const auto row = static_cast<Eigen::Index>(r);
        Eigen::Index col = 0;
        d.X(row, col++) = 1.0;
        for (const auto& c : numeric) d.X(row, col++) = c.values[i];
        for (const auto& e : encoded) {
            for (const auto& level : e.levels) d.X(row, col++) = (*e.values)[i] == level ? 1.0 : 0.0;
        }
    }
    return d;
}

RegressionResult logistic_fit(const Matrix& X, std::span<const double> y, const std::vector<std::string>& names,
                              const LogisticOptions& options) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (static_cast<std::size_t>(n) != y.size()) throw DimensionError("design rows and outcome length differ");
    if (static_cast<std::size_t>(p) != names.size()) throw DimensionError("design columns and names differ");
    if (n == 0 || p == 0) throw DataError("empty design");
    std::size_t positives = 0;
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw DataError("logistic outcome must be 0 or 1");
        if (v == 1.0) ++positives;
    }
    if (positives == 0 || positives == y.size()) throw DataError("logistic outcome has a single class");

    const std::vector<std::size_t> aliased = aliased_columns(X);
    if (!aliased.empty()) {
        std::string msg = "design is rank deficient; aliased columns:";
        for (std::size_t j : aliased) msg += " " + names[j];
        throw DataError(msg);
    }

    RegressionResult out;
    out.names = names;
    out.n = static_cast<std::size_t>(n);

    Vector beta = Vector::Zero(p);
    Vector eta = X * beta;
    double dev = deviance(eta, y);
    out.deviance_trace.push_back(dev);
    const Eigen::Map<const Vector> yv(y.data(), n);

    Matrix info(p, p);
    for (int iter = 0; iter < options.max_iters; ++iter) {
        const Vector mu = sigmoid(eta);
        const Vector w = mu.array() * (1.0 - mu.array());
        const Vector score = X.transpose() * (yv - mu);
        if (score.cwiseAbs().maxCoeff() < options.score_tol) {
            out.converged = true;
            break;
        }
        info = X.transpose() * w.asDiagonal() * X;
        const Eigen::LDLT<Matrix> ldlt(info);
        const Vector step = ldlt.solve(score);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) break;

        double scale = 1.0;
        Vector trial_beta;
        Vector trial_eta;
        double trial_dev = 0.0;
        bool accepted = false;
        for (int h = 0; h < 40; ++h, scale *= 0.5) {
            trial_beta = beta + scale * step;
            trial_eta = X * trial_beta;
            trial_dev = deviance(trial_eta, y);
            if (trial_dev <= dev) {
                accepted = true;
                break;
            }
        }
        ++out.iterations;
        if (!accepted) break;
        const double change = std::abs(dev - trial_dev) / (std::abs(trial_dev) + 0.1);
        beta = trial_beta;
        eta = trial_eta;
        dev = trial_dev;
        out.deviance_trace.push_back(dev);
        if (change < options.deviance_tol) {
            out.converged = true;
            break;
        }
    }

    const Vector mu = sigmoid(eta);
    const Vector w = mu.array() * (1.0 - mu.array());
    info = X.transpose() * w.asDiagonal() * X;
    Matrix cov = Matrix::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() == Eigen::Success) cov = llt.solve(Matrix::Identity(p, p));

    const double extreme = 1e-8;
    const bool saturated = ((mu.array() < extreme) || (mu.array() > 1.0 - extreme)).any();
    out.separated = beta.cwiseAbs().maxCoeff() > options.separation_bound && saturated;

    out.estimates = beta;
    out.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.odds_ratios = beta.array().exp();
    out.ci_low.resize(p);
    out.ci_high.resize(p);
    out.p_values.resize(p);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double se = out.std_errors[j];
        out.p_values[j] = normal_two_sided_p(beta[j] / se);
        if (std::isnan(se)) out.p_values[j] = nan;
        out.ci_low[j] = out.separated ? nan : std::exp(beta[j] - 1.96 * se);
        out.ci_high[j] = out.separated ? nan : std::exp(beta[j] + 1.96 * se);
    }
    return out;
}

}  // namespace vista::stats
