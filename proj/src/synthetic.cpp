#include "vista/synthetic.hpp"

#include "vista/lgssm.hpp"
#include "vista/linalg.hpp"
#include "vista/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vista::synthetic {

namespace {

constexpr std::uint32_t kStreamSeries = 0;
constexpr std::uint32_t kStreamAssessment = 1;
constexpr std::uint32_t kStreamDemographics = 2;

Vector standard_normal(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    return z;
}

template <std::size_t N>
std::size_t draw_category(const std::array<double, N>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    for (std::size_t i = 0; i < N; ++i) {
        if (u < probs[i]) return i;
        u -= probs[i];
    }
    return N - 1;
}

ClusterParameters diagonal_model(const Vector& mu, double p_var, double sigma_var, double gamma_var) {
    const Eigen::Index d = mu.size();
    ClusterParameters p;
    p.mu = mu;
    p.A = Matrix::Zero(d, d);
    p.C = Matrix::Identity(d, d);
    p.P = p_var * Matrix::Identity(d, d);
    p.Sigma = sigma_var * Matrix::Identity(d, d);
    p.Gamma = gamma_var * Matrix::Identity(d, d);
    return p;
}

}  // namespace

void CohortSpec::validate() const {
    if (clusters.empty()) throw Error("cohort spec has no clusters");
    if (proportions.size() != clusters.size()) throw Error("proportions and clusters differ in length");
    double sum = 0.0;
    for (double p : proportions) {
        if (p < 0.0) throw Error("negative cluster proportion");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("cluster proportions must sum to 1");
    if (timestamps.min_count < 1 || timestamps.max_count < timestamps.min_count) throw Error("invalid count range");
    if (!(timestamps.interarrival_days > 0.0)) throw Error("inter-arrival scale must be positive");
    if (!(horizon_days > 0.0)) throw Error("horizon must be positive");
    if (!(timestamps.start_day < horizon_days)) throw Error("start day must precede the horizon");
    for (const auto& c : clusters) {
        check_dimensions(c);
        if (c.obs_dim() != clusters.front().obs_dim()) throw DimensionError("clusters differ in observation dimension");
    }
}

std::mt19937_64 series_stream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index & 0xffffffffu), static_cast<std::uint32_t>(index >> 32), tag};
    return std::mt19937_64(seq);
}

std::vector<double> sample_timestamps(const CohortSpec& spec, std::mt19937_64& rng) {
    const TimestampModel& tm = spec.timestamps;
    std::uniform_int_distribution<int> count_dist(tm.min_count, tm.max_count);
    const int count = count_dist(rng);

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    std::exponential_distribution<double> expo(1.0 / tm.interarrival_days);
    auto gap = [&]() {
        if (tm.kind == InterArrival::Fixed) return tm.interarrival_days;
        double g = 0.0;
        while (!(g > 0.0)) g = expo(rng);
        return g;
    };

    double t = tm.kind == InterArrival::Fixed ? tm.start_day : tm.start_day + gap();
    while (static_cast<int>(out.size()) < count && t < spec.horizon_days) {
        // Guard against a gap too small to advance the double.
        if (out.empty() || t > out.back()) out.push_back(t);
        t += gap();
    }
    if (out.empty()) out.push_back(tm.start_day);
    return out;
}

TimeSeries sample_series(const ClusterParameters& params, std::span<const double> timestamps, std::mt19937_64& rng,
                         bool clip, std::size_t* clipped) {
    check_dimensions(params);
    if (timestamps.empty()) throw DimensionError("empty timestamp grid");
    const Eigen::Index dx = params.latent_dim();
    const Eigen::Index dy = params.obs_dim();
    const Matrix root_P = linalg::psd_sqrt(params.P);
    const Matrix root_Gamma = linalg::psd_sqrt(params.Gamma);
    const Matrix root_Sigma = linalg::psd_sqrt(params.Sigma);

    TimeSeries s;
    s.timestamps.assign(timestamps.begin(), timestamps.end());
    s.observations.resize(dy, static_cast<Eigen::Index>(timestamps.size()));

    Vector x = params.mu + root_P * standard_normal(dx, rng);
    for (std::size_t k = 0; k < timestamps.size(); ++k) {
        double delta = 1.0;
        if (k > 0) {
            delta = timestamps[k] - timestamps[k - 1];
            if (!(delta > 0.0)) throw DimensionError("timestamps must be strictly increasing");
            x = step_matrix(params.A, delta) * x + std::sqrt(delta) * (root_Gamma * standard_normal(dx, rng));
        }
        Vector y = params.C * x + (root_Sigma * standard_normal(dy, rng)) / std::sqrt(delta);
        if (clip) {
            for (Eigen::Index j = 0; j < dy; ++j) {
                if (y[j] < 0.0 || y[j] > 1.0) {
                    y[j] = std::clamp(y[j], 0.0, 1.0);
                    if (clipped) ++*clipped;
                }
            }
        }
        s.observations.col(static_cast<Eigen::Index>(k)) = y;
    }
    return s;
}

Cohort sample_cohort(const CohortSpec& spec, std::size_t threads) {
    spec.validate();
    const std::size_t n = spec.n_series;
    Cohort cohort;
    cohort.series.resize(n);
    cohort.labels.resize(n);
    std::vector<std::size_t> clipped(n, 0);

    parallel_for(n, threads, [&](std::size_t i) {
        auto rng = series_stream(spec.seed, i, kStreamSeries);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double u = unif(rng);
        std::size_t label = spec.clusters.size() - 1;
        for (std::size_t l = 0; l < spec.proportions.size(); ++l) {
            if (u < spec.proportions[l]) {
                label = l;
                break;
            }
            u -= spec.proportions[l];
        }
        // A zero-proportion cluster is never chosen, even through rounding.
        while (spec.proportions[label] == 0.0 && label > 0) --label;

        const std::vector<double> ts = sample_timestamps(spec, rng);
        TimeSeries s = sample_series(spec.clusters[label], ts, rng, spec.clip, &clipped[i]);
        char id[32];
        std::snprintf(id, sizeof id, "sim-%06zu", i);
        s.patient_id = id;
        cohort.series[i] = std::move(s);
        cohort.labels[i] = static_cast<int>(label);
    });

    for (std::size_t i = 0; i < n; ++i) {
        cohort.clipped_values += clipped[i];
        cohort.total_values += static_cast<std::size_t>(cohort.series[i].observations.size());
    }
    return cohort;
}

// -----------------------------------------------------------------------------
// Presets
// -----------------------------------------------------------------------------

CohortSpec well_separated_preset(std::size_t n_series, std::uint64_t seed) {
    using E = Emotion;
    Vector mu0(7), mu1(7);
    mu0 << 0.15, 0.10, 0.20, 0.45, 0.35, 0.15, 0.10;
    mu1 << 0.15, 0.10, 0.20, 0.15, 0.35, 0.45, 0.10;

    ClusterParameters c0 = diagonal_model(mu0, 4e-4, 1.6e-3, 2e-6);
    ClusterParameters c1 = diagonal_model(mu1, 4e-4, 1.6e-3, 2e-6);
    c0.A.diagonal().setConstant(-0.002);
    c1.A.diagonal().setConstant(-0.002);
    const auto anger = static_cast<Eigen::Index>(index(E::Anger));
    const auto sadness = static_cast<Eigen::Index>(index(E::Sadness));
    c0.A(anger, sadness) = 0.004;
    c1.A(anger, sadness) = -0.004;

    CohortSpec spec;
    spec.clusters = {c0, c1};
    spec.proportions = {0.5, 0.5};
    spec.n_series = n_series;
    spec.timestamps = TimestampModel{20, 50, InterArrival::Exponential, 1.95, 0.0};
    spec.horizon_days = 84.0;
    spec.seed = seed;
    spec.clip = false;
    return spec;
}

CohortSpec paper_shaped_preset(std::size_t n_series, std::uint64_t seed) {
    using E = Emotion;
    // Levels and weekly drifts on the scale of observed talk-turn emotion
    // scores: (intercept, slope per week) for each emotion and cluster.
    const double level0[7] = {0.0599, 0.0308, 0.1855, 0.1508, 0.3168, 0.1773, 0.0791};
    const double level1[7] = {0.1032, 0.0754, 0.1758, 0.1224, 0.2761, 0.1718, 0.0759};
    const double slope0[7] = {-0.0021, -0.0011, -0.0056, 0.0086, -0.0076, 0.0071, 0.0007};
    const double slope1[7] = {-0.00003, -0.0023, -0.0031, 0.0030, -0.0035, 0.0042, 0.0017};

    Vector mu0(7), mu1(7);
    for (int j = 0; j < 7; ++j) {
        mu0[j] = level0[j];
        mu1[j] = level1[j];
    }
    ClusterParameters c0 = diagonal_model(mu0, 1e-3, 4e-3, 1e-5);
    ClusterParameters c1 = diagonal_model(mu1, 1e-3, 4e-3, 1e-5);
    for (int j = 0; j < 7; ++j) {
        c0.A(j, j) = slope0[j] / (kDaysPerWeek * level0[j]);
        c1.A(j, j) = slope1[j] / (kDaysPerWeek * level1[j]);
    }
    const auto sadness = static_cast<Eigen::Index>(index(E::Sadness));
    const auto fear = static_cast<Eigen::Index>(index(E::Fear));
    for (Eigen::Index r = 0; r < 7; ++r) {
        if (r != sadness) c1.A(r, sadness) += 0.002;
        if (r != fear) c1.A(r, fear) += 0.001;
    }

    CohortSpec spec;
    spec.clusters = {c0, c1};
    spec.proportions = {0.6834, 0.3166};
    spec.n_series = n_series;
    spec.timestamps = TimestampModel{20, 50, InterArrival::Exponential, 1.95, 0.0};
    spec.horizon_days = 84.0;
    spec.seed = seed;
    spec.clip = true;
    return spec;
}

// -----------------------------------------------------------------------------
// Assessments and covariates
// -----------------------------------------------------------------------------

std::vector<AssessmentRecord> simulate_assessments(std::span<const std::string> patient_ids, std::span<const int> labels,
                                                   std::uint64_t seed, const AssessmentModel& model) {
    if (patient_ids.size() != labels.size()) throw DimensionError("patient ids and labels differ in length");
    std::vector<std::vector<AssessmentRecord>> per_patient(patient_ids.size());

    for (std::size_t i = 0; i < patient_ids.size(); ++i) {
        auto rng = series_stream(seed, i, kStreamAssessment);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const int label = labels[i];
        const std::size_t cl = std::min<std::size_t>(static_cast<std::size_t>(std::max(label, 0)),
                                                     model.change_by_cluster.size() - 1);

        std::array<double, kPhq9Items + kGad7Items> base{};
        for (std::size_t j = 0; j < base.size(); ++j) {
            base[j] = static_cast<double>(draw_category(model.baseline_item_probs, rng));
            if (label >= 1) base[j] = std::clamp(std::round(base[j] + model.baseline_shift[j]), 0.0, 3.0);
        }
        const double change = model.change_by_cluster[cl] + model.change_sd * normal(rng);

        auto make = [&](int week, double recorded) {
            AssessmentRecord rec;
            rec.patient_id = patient_ids[i];
            rec.week = week;
            rec.recorded_week = recorded;
            const double progress = static_cast<double>(week) / 12.0;
            for (std::size_t j = 0; j < base.size(); ++j) {
                double v = base[j];
                if (week > 0) v = std::round(base[j] + change * progress + model.item_noise_sd * normal(rng));
                const int item = static_cast<int>(std::clamp(v, 0.0, 3.0));
                if (j < kPhq9Items) {
                    rec.phq9_items[j] = item;
                } else {
                    rec.gad7_items[j - kPhq9Items] = item;
                }
            }
            rec.compute_totals();
            return rec;
        };

        per_patient[i].push_back(make(0, 0.0));
        for (int week : {3, 6, 9, 12}) {
            if (week > 3 && unif(rng) < model.dropout_per_followup) break;
            const double jitter = model.week_jitter * (2.0 * unif(rng) - 1.0);
            per_patient[i].push_back(make(week, week + jitter));
        }
    }

    std::vector<AssessmentRecord> out;
    for (auto& recs : per_patient) {
        for (auto& r : recs) out.push_back(std::move(r));
    }
    return out;
}

std::vector<Demographics> simulate_demographics(std::span<const std::string> patient_ids, std::uint64_t seed,
                                                double missing_rate) {
    static const std::array<std::string_view, 3> genders = {"Female", "Male", "Non-binary/other"};
    static const std::array<double, 3> gender_p = {0.78, 0.20, 0.02};
    static const std::array<std::string_view, 4> ages = {"18-25", "26-35", "36-49", "50+"};
    static const std::array<double, 4> age_p = {0.29, 0.51, 0.17, 0.03};
    static const std::array<std::string_view, 5> educations = {"High school or less", "Some college", "Associate degree",
                                                               "Bachelor or higher", "Postgraduate"};
    static const std::array<double, 5> education_p = {0.16, 0.09, 0.04, 0.60, 0.11};

    std::vector<Demographics> out;
    out.reserve(patient_ids.size());
    for (std::size_t i = 0; i < patient_ids.size(); ++i) {
        auto rng = series_stream(seed, i, kStreamDemographics);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Demographics d;
        d.patient_id = patient_ids[i];
        d.gender = genders[draw_category(gender_p, rng)];
        d.age_group = ages[draw_category(age_p, rng)];
        d.education = educations[draw_category(education_p, rng)];
        if (unif(rng) < missing_rate) d.gender.clear();
        if (unif(rng) < missing_rate) d.age_group.clear();
        if (unif(rng) < missing_rate) d.education.clear();
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace vista::synthetic
