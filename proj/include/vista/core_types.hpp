#pragma once

// Domain types shared by every stage of the clustering pipeline.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vista {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// =============================================================================
// Errors
// =============================================================================

/// Base class for every fault raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible shapes between a series, a parameter set or a matrix argument.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown during filtering, smoothing or an M-step solve.
class InferenceError : public Error {
public:
    InferenceError(const std::string& what, std::ptrdiff_t step = -1)
        : Error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what), step_(step) {}

    /// Zero-based step index of the failing recursion, or -1 when not step-specific.
    std::ptrdiff_t step() const noexcept { return step_; }

private:
    std::ptrdiff_t step_;
};

/// Malformed or out-of-contract input data.
class DataError : public Error {
public:
    using Error::Error;
};

// =============================================================================
// Emotion vocabulary
// =============================================================================

inline constexpr std::size_t kNumEmotions = 7;

/// Canonical emotion order. Every matrix row/column and every serialized
/// vector indexes emotions in exactly this order.
inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"};

enum class Emotion : std::size_t { Anger = 0, Disgust, Fear, Joy, Neutral, Sadness, Surprise };

constexpr std::size_t index(Emotion e) noexcept { return static_cast<std::size_t>(e); }

/// Index of a canonical emotion name; throws DataError for unknown names.
std::size_t emotion_index(std::string_view name);

inline constexpr double kDaysPerWeek = 7.0;

/// One talk turn's emotion scores, one value per canonical emotion.
struct EmotionVector {
    std::array<double, kNumEmotions> values{};

    double operator[](Emotion e) const noexcept { return values[index(e)]; }
    double& operator[](Emotion e) noexcept { return values[index(e)]; }

    Vector to_eigen() const { return Eigen::Map<const Vector>(values.data(), kNumEmotions); }
};

// =============================================================================
// Time series
// =============================================================================

/// One patient's irregularly sampled multivariate series.
///
/// Timestamps are days from treatment start. Observations are stored one
/// column per step (dimension x steps) so a step is a contiguous column.
struct TimeSeries {
    std::string patient_id;
    std::vector<double> timestamps;
    Matrix observations;

    std::size_t size() const noexcept { return timestamps.size(); }
    Eigen::Index dim() const noexcept { return observations.rows(); }

    /// Gap preceding step k. The first step uses the unit convention.
    double delta(std::size_t k) const { return k == 0 ? 1.0 : timestamps[k] - timestamps[k - 1]; }

    static TimeSeries from_emotions(std::string patient_id, std::vector<double> timestamps,
                                    const std::vector<EmotionVector>& emotions);
};

struct ValidationOptions {
    /// Required observation dimension; 0 accepts any.
    Eigen::Index expected_dim = static_cast<Eigen::Index>(kNumEmotions);
    /// Require every element in [0, 1].
    bool unit_interval = true;
    /// Warn when a vector's sum deviates from 1 by more than this.
    double sum_warning_tolerance = 0.01;
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    bool ok() const noexcept { return violations.empty(); }
};

/// Checks every TimeSeries invariant and reports all violations; never throws.
ValidationReport validate_series(const TimeSeries& series, const ValidationOptions& options = {});

// =============================================================================
// Model parameters
// =============================================================================

/// Parameters of one cluster's Delta-scaled linear Gaussian state-space model.
///
///   x_1 = mu + u,                   u ~ N(0, P)
///   x_k = (I + D_k A) x_{k-1} + w,  w ~ N(0, D_k Gamma)
///   y_k = C x_k + v,                v ~ N(0, Sigma / D_k)
struct ClusterParameters {
    Vector mu;
    Matrix A;
    Matrix C;
    Matrix P;
    Matrix Sigma;
    Matrix Gamma;

    Eigen::Index latent_dim() const noexcept { return mu.size(); }
    Eigen::Index obs_dim() const noexcept { return C.rows(); }
};

/// Shape checks only; throws DimensionError.
void check_dimensions(const ClusterParameters& params);

/// Shape, symmetry (1e-10) and PSD (eigenvalues >= -1e-10) checks; returns violations.
std::vector<std::string> validate_parameters(const ClusterParameters& params);

struct FittedMixture {
    std::vector<ClusterParameters> clusters;
    std::vector<double> weights;
    Matrix responsibilities;  // series x clusters
    std::vector<int> labels;
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
    std::vector<bool> frozen;
    std::vector<std::string> warnings;

    std::size_t num_clusters() const noexcept { return clusters.size(); }
};

// =============================================================================
// Assessments
// =============================================================================

inline constexpr std::size_t kPhq9Items = 9;
inline constexpr std::size_t kGad7Items = 7;
inline constexpr int kScheduledWeeks[] = {0, 3, 6, 9, 12};

/// Short labels for the PHQ-9 items (standard item order) then GAD-7 items.
inline constexpr std::array<std::string_view, kPhq9Items + kGad7Items> kItemNames = {
    "Anhed",   "Mood",   "Sleep",   "Fatigue", "Weight",   "Worthl",  "Concent", "Psychom",
    "Suicide", "Nervous", "UncWor", "GenWor",  "NoRelax", "Restless", "Irritab", "Fear"};

struct AssessmentRecord {
    std::string patient_id;
    int week = 0;                // binned to the schedule
    double recorded_week = 0.0;  // as recorded, used for gap and window rules
    std::array<int, kPhq9Items> phq9_items{};
    std::array<int, kGad7Items> gad7_items{};
    int phq9_total = 0;
    int gad7_total = 0;

    /// Recomputes totals from items; throws DataError for an item outside [0, 3].
    void compute_totals();
    int item(std::size_t i) const { return i < kPhq9Items ? phq9_items[i] : gad7_items[i - kPhq9Items]; }
};

/// Nearest scheduled week; ties snap downward.
int bin_week(double recorded_week);

/// Regression covariates. Empty strings mean missing.
struct Demographics {
    std::string patient_id;
    std::string age_group;
    std::string gender;
    std::string education;
};

}  // namespace vista
