#pragma once

// End-to-end commands shared by the command-line tool and the Python module.

#include "vista/em.hpp"
#include "vista/ingest.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace vista {

/// Invalid configuration or command-line usage.
class UsageError : public Error {
public:
    using Error::Error;
};

struct SimulateConfig {
    std::string preset = "paper-shaped";  ///< paper-shaped or well-separated
    std::size_t n = 0;
    bool with_assessments = false;
    /// Defaults to the preset's own setting.
    std::optional<bool> clip;
};

struct PipelineConfig {
    std::filesystem::path series;
    std::filesystem::path assessments;
    std::filesystem::path diagnoses;
    std::filesystem::path demographics;
    std::filesystem::path labels;        ///< cluster labels for outcomes
    std::filesystem::path truth_labels;  ///< ground truth for scoring a fit
    std::filesystem::path model;
    std::filesystem::path output_dir = ".";

    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    FitConfig fit;
    double network_delta_weeks = 1.0;
    std::optional<double> edge_threshold;
    ingest::CohortRules rules;
    SimulateConfig simulate;
    bool resume = false;

    /// Throws UsageError for unknown keys or wrongly typed values.
    static PipelineConfig from_json_text(const std::string& text);
    static PipelineConfig from_file(const std::filesystem::path& path);
    /// Canonical JSON of every setting that influences results.
    std::string canonical_json() const;
    /// 16 hex digits of the FNV-1a 64-bit hash of canonical_json().
    std::string hash() const;
};

/// Library version string.
std::string version();

/// Stable 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

std::string cmd_simulate(const PipelineConfig& cfg, std::ostream& log);
void cmd_ingest(const PipelineConfig& cfg, std::ostream& log);
void cmd_fit(const PipelineConfig& cfg, std::ostream& log);
void cmd_assign(const PipelineConfig& cfg, std::ostream& log);
void cmd_network(const PipelineConfig& cfg, std::ostream& log);
void cmd_outcomes(const PipelineConfig& cfg, std::ostream& log);
/// ingest, filter, fit, assign, network and outcomes into output_dir, plus manifest.json.
void cmd_pipeline(const PipelineConfig& cfg, std::ostream& log);

/// Output file names inside output_dir.
namespace files {
inline constexpr const char* kSeries = "series.jsonl";
inline constexpr const char* kTruthLabels = "labels_true.csv";
inline constexpr const char* kAssessments = "assessments.csv";
inline constexpr const char* kDemographics = "demographics.csv";
inline constexpr const char* kCohort = "cohort.jsonl";
inline constexpr const char* kFunnel = "funnel.json";
inline constexpr const char* kWindows = "windows.csv";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kLabels = "labels.csv";
inline constexpr const char* kLoglik = "loglik.csv";
inline constexpr const char* kResponsibilities = "responsibilities.csv";
inline constexpr const char* kEdges = "edges.csv";
inline constexpr const char* kCentrality = "centrality.csv";
inline constexpr const char* kOutcomes = "outcomes.csv";
inline constexpr const char* kRegressions = "regressions.csv";
inline constexpr const char* kItems = "items.csv";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace files

}  // namespace vista
