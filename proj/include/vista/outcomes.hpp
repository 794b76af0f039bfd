#pragma once

// Clinical outcome labels and the cluster comparison battery.

#include "vista/core_types.hpp"
#include "vista/stats.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <span>

namespace vista {

enum class Instrument { Phq9, Gad7 };

inline constexpr std::array<Instrument, 2> kInstruments = {Instrument::Phq9, Instrument::Gad7};

std::string_view instrument_name(Instrument i);

struct OutcomeRecord {
    std::string patient_id;
    Instrument instrument = Instrument::Phq9;
    int baseline = 0;
    int final_total = 0;
    bool significant_change = false;
    bool response = false;
    bool remission = false;
    bool deterioration = false;
};

struct OutcomeThresholds {
    int clinical_cutoff = 10;
    int min_change = 5;
    double response_fraction = 0.5;
    int remission_cutoff = 5;
    int first_final_week = 3;
    int last_final_week = 12;
};

struct OutcomeLabels {
    std::vector<OutcomeRecord> records;  ///< sorted by patient, then instrument
    std::vector<std::pair<std::string, std::string>> excluded;  ///< (patient_id, reason)
};

/// Labels each patient with a week-0 assessment and at least one assessment in
/// weeks 3..12 (the last one is final). Significant change needs a baseline at
/// or above the cutoff, a final below it and a drop of at least min_change.
/// Response is a drop of at least half the baseline (baseline > 0); remission
/// is a final below remission_cutoff; deterioration a rise of at least
/// min_change. Input order does not matter.
OutcomeLabels label_outcomes(std::span<const AssessmentRecord> assessments, const OutcomeThresholds& t = {});

enum class Timepoint { Initial, Final };

struct ItemComparisonRow {
    std::string item;
    Timepoint timepoint = Timepoint::Initial;
    double u = 0.0;  ///< U of cluster 0
    double p_raw = 1.0;
    double p_bonferroni = 1.0;
    std::array<double, 2> mean{};
    std::array<double, 2> share_at_threshold{};  ///< fraction scoring >= 2
    std::array<std::size_t, 2> n{};
};

/// Per-item Mann-Whitney U between clusters 0 and 1 at baseline or at each
/// patient's final assessment, Bonferroni-corrected over the 16 items.
/// Patients without a label or outside clusters {0, 1} are ignored. Throws
/// DataError when either cluster has no patients.
std::vector<ItemComparisonRow> baseline_item_comparison(std::span<const AssessmentRecord> assessments,
                                                        const std::map<std::string, int>& labels, Timepoint when,
                                                        const OutcomeThresholds& t = {});

struct OutcomeRegression {
    std::string outcome;  ///< significant_change, response, remission or deterioration
    Instrument instrument = Instrument::Phq9;
    std::optional<stats::RegressionResult> result;
    std::string note;  ///< why result is empty
};

/// Reference levels of the demographic covariates.
struct CovariateReferences {
    std::string age_group = "26-35";
    std::string gender = "Female";
    std::string education = "Bachelor or higher";
};

/// Logistic regression of every outcome on cluster indicators (cluster 0 is
/// the reference) plus demographics when supplied, with listwise deletion.
std::vector<OutcomeRegression> outcome_regressions(const OutcomeLabels& outcomes, const std::map<std::string, int>& labels,
                                                   int num_clusters, const std::vector<Demographics>* demographics,
                                                   const CovariateReferences& refs = {});

void write_outcomes_csv(std::ostream& out, const OutcomeLabels& outcomes);
void write_regressions_csv(std::ostream& out, const std::vector<OutcomeRegression>& regressions);
void write_item_comparison_csv(std::ostream& out, const std::vector<ItemComparisonRow>& rows);

}  // namespace vista
