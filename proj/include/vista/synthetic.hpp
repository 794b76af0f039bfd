#pragma once

// Ground-truth cohorts sampled from mixtures of Delta-scaled LGSSMs.

#include "vista/core_types.hpp"

#include <cstdint>
#include <random>
#include <span>

namespace vista::synthetic {

enum class InterArrival { Fixed, Exponential };

struct TimestampModel {
    int min_count = 20;
    int max_count = 50;
    InterArrival kind = InterArrival::Exponential;
    /// Fixed spacing, or the mean of the exponential inter-arrival (days).
    double interarrival_days = 2.3;
    double start_day = 0.0;
};

struct CohortSpec {
    std::vector<ClusterParameters> clusters;
    std::vector<double> proportions;
    std::size_t n_series = 0;
    TimestampModel timestamps;
    double horizon_days = 84.0;
    std::uint64_t seed = 0;
    bool clip = false;

    void validate() const;
};

/// Independent random stream for one series; depends only on (seed, index, tag).
std::mt19937_64 series_stream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag = 0);

/// Count drawn uniformly in [min_count, max_count]; the fixed grid starts at
/// start_day, exponential arrivals start one draw after it. Stops at the
/// count or before reaching the horizon, whichever comes first.
std::vector<double> sample_timestamps(const CohortSpec& spec, std::mt19937_64& rng);

/// Ancestral sampling of the state-space model on the given timestamps. With
/// clip, observations are clamped to [0, 1] and the number of clamped values
/// is added to *clipped when non-null.
TimeSeries sample_series(const ClusterParameters& params, std::span<const double> timestamps, std::mt19937_64& rng,
                         bool clip = false, std::size_t* clipped = nullptr);

struct Cohort {
    std::vector<TimeSeries> series;
    std::vector<int> labels;
    std::size_t clipped_values = 0;
    std::size_t total_values = 0;

    double clipped_fraction() const {
        return total_values == 0 ? 0.0 : static_cast<double>(clipped_values) / static_cast<double>(total_values);
    }
};

Cohort sample_cohort(const CohortSpec& spec, std::size_t threads = 0);

/// Two clusters whose means differ by at least 5 pooled standard deviations
/// in joy and sadness and whose A matrices differ in sign on the
/// sadness -> anger coupling. Exponential sampling over 84 days, no clipping.
CohortSpec well_separated_preset(std::size_t n_series, std::uint64_t seed);

/// Seven emotions, two clusters sized roughly 68/32, levels and drifts on the
/// scale of real talk-turn emotion scores, roughly 34 turns per series,
/// clipped to [0, 1]. The second cluster has sadness and fear driving the
/// other emotions.
CohortSpec paper_shaped_preset(std::size_t n_series, std::uint64_t seed);

// -----------------------------------------------------------------------------
// Assessments and covariates
// -----------------------------------------------------------------------------

struct AssessmentModel {
    /// Baseline item distribution over the Likert values 0..3.
    std::array<double, 4> baseline_item_probs = {0.10, 0.30, 0.35, 0.25};
    /// Mean per-item change by week 12, one entry per cluster (negative improves).
    std::vector<double> change_by_cluster = {-0.6, -0.35};
    double change_sd = 0.7;
    double item_noise_sd = 0.5;
    /// Additive baseline item shifts for clusters >= 1 (one per item, 16 entries).
    std::array<double, kPhq9Items + kGad7Items> baseline_shift{};
    double dropout_per_followup = 0.15;
    double week_jitter = 0.4;
};

std::vector<AssessmentRecord> simulate_assessments(std::span<const std::string> patient_ids, std::span<const int> labels,
                                                   std::uint64_t seed, const AssessmentModel& model = {});

std::vector<Demographics> simulate_demographics(std::span<const std::string> patient_ids, std::uint64_t seed,
                                                double missing_rate = 0.05);

}  // namespace vista::synthetic
