#pragma once

// File formats, cohort eligibility rules and assessment-anchored windows.

#include "vista/core_types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>

namespace vista::ingest {

struct SeriesParseResult {
    std::vector<TimeSeries> series;
    std::vector<std::string> diagnostics;  ///< one per skipped line, prefixed with the line number
    std::vector<std::string> warnings;
    std::size_t skipped = 0;
};

/// JSONL, one object per line: {"patient_id", "timestamps", "emotions"}.
/// Invalid records are skipped with a diagnostic; blank lines are ignored.
SeriesParseResult parse_emotion_series(std::istream& in, const ValidationOptions& options = {});
SeriesParseResult parse_emotion_series(const std::filesystem::path& path, const ValidationOptions& options = {});

void write_emotion_series(std::ostream& out, std::span<const TimeSeries> series);

struct AssessmentParseResult {
    std::vector<AssessmentRecord> records;
    std::vector<std::string> diagnostics;
    std::size_t rejected = 0;
};

/// Recorded weeks outside this range are rejected rather than binned.
inline constexpr double kMinRecordedWeek = 0.0;
inline constexpr double kMaxRecordedWeek = 13.5;

/// CSV with header patient_id, week, phq1..phq9, gad1..gad7 (any column order).
AssessmentParseResult parse_assessments(std::istream& in);
AssessmentParseResult parse_assessments(const std::filesystem::path& path);

void write_assessments(std::ostream& out, std::span<const AssessmentRecord> records);

/// CSV patient_id, code; returns the codes per patient.
std::map<std::string, std::set<std::string>> parse_diagnoses(const std::filesystem::path& path);

/// CSV patient_id, age_group, gender, education; empty fields are missing.
std::vector<Demographics> parse_demographics(const std::filesystem::path& path);
void write_demographics(std::ostream& out, std::span<const Demographics> rows);

/// CSV series_id, cluster.
std::map<std::string, int> parse_labels(const std::filesystem::path& path);
void write_labels(std::ostream& out, std::span<const std::string> ids, std::span<const int> labels);

// -----------------------------------------------------------------------------
// Eligibility
// -----------------------------------------------------------------------------

enum class GapRuleMode {
    /// Patients with fewer assessments than the window are not checked.
    SkipIfFewer,
    /// Patients with fewer assessments are checked on the pairs they have.
    AvailablePairs,
};

struct CohortRules {
    int min_baseline_total = 10;
    std::size_t min_talk_turns = 20;
    double gap_low_weeks = 2.0;
    double gap_high_weeks = 4.0;
    std::size_t gap_assessments = 5;
    GapRuleMode gap_mode = GapRuleMode::SkipIfFewer;
    bool require_transcript = true;
    std::set<std::string> excluded_diagnoses;

    void validate() const;
};

struct FunnelStage {
    std::string stage;
    std::size_t excluded = 0;
    std::size_t remaining = 0;
};

struct CohortFilterResult {
    std::vector<std::string> eligible;              ///< sorted
    std::vector<FunnelStage> funnel;                ///< input first, then one entry per stage
    std::map<std::string, std::string> exclusions;  ///< patient -> stage that excluded it
};

/// Stages in order: diagnosis (only when diagnoses are supplied), transcript,
/// assessment gap, baseline severity, engagement. Every patient id seen in
/// either input is counted exactly once.
CohortFilterResult filter_cohort(std::span<const TimeSeries> series, std::span<const AssessmentRecord> assessments,
                                 const CohortRules& rules,
                                 const std::map<std::string, std::set<std::string>>* diagnoses = nullptr);

void write_funnel_json(std::ostream& out, const std::vector<FunnelStage>& funnel);

// -----------------------------------------------------------------------------
// Windows
// -----------------------------------------------------------------------------

struct TurnWindow {
    int week = 0;               ///< binned week of the anchoring assessment
    double lower_day = 0.0;     ///< inclusive bound (t >= lower_day)
    double previous_day = 0.0;  ///< exclusive bound (t > previous_day)
    double upper_day = 0.0;     ///< inclusive bound (t <= upper_day)
    std::vector<std::size_t> turns;
};

/// One window per follow-up assessment of the series' patient, using recorded
/// weeks: previous_week * 7 < t, (week - 3) * 7 <= t, t <= week * 7. The
/// baseline anchors no window.
std::vector<TurnWindow> anchor_talk_turns(const TimeSeries& series, std::span<const AssessmentRecord> assessments);

}  // namespace vista::ingest
