// vista: command-line front end for simulation, cohort filtering, clustering,
// temporal networks and outcome statistics.

#include "vista/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using vista::PipelineConfig;

// Flag values are collected separately so that only flags actually given
// override the JSON config.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out, series, assessments, diagnoses, demographics, labels, truth, model;
    std::optional<int> clusters, max_iters;
    std::optional<long> latent_dim;
    std::optional<double> tol, min_weight, delta, threshold;
    std::optional<std::string> init, preset, gap_mode;
    std::optional<std::size_t> n, min_turns;
    std::optional<int> min_baseline;
    std::vector<std::string> exclude_diagnoses;
    bool with_assessments = false;
    bool no_clip = false;
    bool no_transcript_rule = false;
    bool resume = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file; flags override its values");
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--out", o.out, "Output directory");
}

void add_fit_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--clusters", o.clusters, "Number of clusters M");
    cmd->add_option("--latent-dim", o.latent_dim, "Latent dimension");
    cmd->add_option("--max-iters", o.max_iters, "EM iteration cap");
    cmd->add_option("--tol", o.tol, "Relative log-likelihood tolerance");
    cmd->add_option("--min-weight", o.min_weight, "Mixing-weight floor");
    cmd->add_option("--init", o.init, "Initialization: kmeans or perturbed");
}

void add_rule_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--diagnoses", o.diagnoses, "Diagnoses CSV (patient_id, code)");
    cmd->add_option("--exclude-diagnosis", o.exclude_diagnoses, "Diagnosis code to exclude (repeatable)");
    cmd->add_option("--min-turns", o.min_turns, "Minimum talk turns");
    cmd->add_option("--min-baseline", o.min_baseline, "Minimum baseline PHQ-9 or GAD-7 total");
    cmd->add_option("--gap-mode", o.gap_mode, "Gap rule for short histories: skip or available_pairs");
    cmd->add_flag("--no-transcript-rule", o.no_transcript_rule, "Keep patients without a transcript");
}

PipelineConfig resolve(const Overrides& o) {
    PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : PipelineConfig::from_file(o.config);
    if (o.seed) cfg.seed = o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.out) cfg.output_dir = *o.out;
    if (o.series) cfg.series = *o.series;
    if (o.assessments) cfg.assessments = *o.assessments;
    if (o.diagnoses) cfg.diagnoses = *o.diagnoses;
    if (o.demographics) cfg.demographics = *o.demographics;
    if (o.labels) cfg.labels = *o.labels;
    if (o.truth) cfg.truth_labels = *o.truth;
    if (o.model) cfg.model = *o.model;
    if (o.clusters) cfg.fit.clusters = *o.clusters;
    if (o.latent_dim) cfg.fit.latent_dim = *o.latent_dim;
    if (o.max_iters) cfg.fit.max_iters = *o.max_iters;
    if (o.tol) cfg.fit.tol = *o.tol;
    if (o.min_weight) cfg.fit.min_weight = *o.min_weight;
    if (o.init) {
        if (*o.init == "kmeans") cfg.fit.init = vista::InitStrategy::KMeans;
        else if (*o.init == "perturbed") cfg.fit.init = vista::InitStrategy::Perturbed;
        else throw vista::UsageError("--init must be kmeans or perturbed");
    }
    if (o.delta) cfg.network_delta_weeks = *o.delta;
    if (o.threshold) cfg.edge_threshold = *o.threshold;
    if (o.preset) cfg.simulate.preset = *o.preset;
    if (o.n) cfg.simulate.n = *o.n;
    if (o.with_assessments) cfg.simulate.with_assessments = true;
    if (o.no_clip) cfg.simulate.clip = false;
    if (o.min_turns) cfg.rules.min_talk_turns = *o.min_turns;
    if (o.min_baseline) cfg.rules.min_baseline_total = *o.min_baseline;
    if (o.gap_mode) {
        if (*o.gap_mode == "skip") cfg.rules.gap_mode = vista::ingest::GapRuleMode::SkipIfFewer;
        else if (*o.gap_mode == "available_pairs") cfg.rules.gap_mode = vista::ingest::GapRuleMode::AvailablePairs;
        else throw vista::UsageError("--gap-mode must be skip or available_pairs");
    }
    if (o.no_transcript_rule) cfg.rules.require_transcript = false;
    for (const auto& code : o.exclude_diagnoses) cfg.rules.excluded_diagnoses.insert(code);
    if (o.resume) cfg.resume = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture-of-state-space clustering of emotion trajectories"};
    app.set_version_flag("--version", vista::version());
    app.require_subcommand(1);
    Overrides o;

    auto* simulate = app.add_subcommand("simulate", "Sample a synthetic cohort");
    add_common(simulate, o);
    simulate->add_option("--preset", o.preset, "paper-shaped or well-separated");
    simulate->add_option("--n", o.n, "Number of series");
    simulate->add_flag("--with-assessments", o.with_assessments, "Also write assessments and demographics");
    simulate->add_flag("--no-clip", o.no_clip, "Do not clamp observations to [0, 1]");

    auto* ingest = app.add_subcommand("ingest", "Parse inputs and apply cohort eligibility rules");
    add_common(ingest, o);
    ingest->add_option("--series", o.series, "Emotion series JSONL");
    ingest->add_option("--assessments", o.assessments, "Assessments CSV");
    add_rule_options(ingest, o);

    auto* fit = app.add_subcommand("fit", "Fit the mixture model");
    add_common(fit, o);
    fit->add_option("--series", o.series, "Emotion series JSONL");
    fit->add_option("--score", o.truth, "Ground-truth labels CSV to score against (ARI)");
    add_fit_options(fit, o);

    auto* assign = app.add_subcommand("assign", "Assign series to clusters of a fitted model");
    add_common(assign, o);
    assign->add_option("--model", o.model, "Model JSON");
    assign->add_option("--series", o.series, "Emotion series JSONL");
    assign->add_option("--score", o.truth, "Ground-truth labels CSV to score against (ARI)");

    auto* network = app.add_subcommand("network", "Temporal networks and centralities of a fitted model");
    add_common(network, o);
    network->add_option("--model", o.model, "Model JSON");
    network->add_option("--delta", o.delta, "Network step in weeks");
    network->add_option("--threshold", o.threshold, "Omit edges with |w| below this from the edge list");

    auto* outcomes = app.add_subcommand("outcomes", "Outcome labels, regressions and item comparisons");
    add_common(outcomes, o);
    outcomes->add_option("--assessments", o.assessments, "Assessments CSV");
    outcomes->add_option("--labels", o.labels, "Cluster labels CSV");
    outcomes->add_option("--demographics", o.demographics, "Demographics CSV");

    auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
    add_common(pipeline, o);
    pipeline->add_option("--series", o.series, "Emotion series JSONL");
    pipeline->add_option("--assessments", o.assessments, "Assessments CSV");
    pipeline->add_option("--demographics", o.demographics, "Demographics CSV");
    pipeline->add_option("--score", o.truth, "Ground-truth labels CSV to score against (ARI)");
    pipeline->add_option("--delta", o.delta, "Network step in weeks");
    pipeline->add_option("--threshold", o.threshold, "Omit edges with |w| below this from the edge list");
    pipeline->add_flag("--resume", o.resume, "Reuse an existing model fitted with the same configuration");
    add_fit_options(pipeline, o);
    add_rule_options(pipeline, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const PipelineConfig cfg = resolve(o);
        if (simulate->parsed()) vista::cmd_simulate(cfg, std::cout);
        else if (ingest->parsed()) vista::cmd_ingest(cfg, std::cout);
        else if (fit->parsed()) vista::cmd_fit(cfg, std::cout);
        else if (assign->parsed()) vista::cmd_assign(cfg, std::cout);
        else if (network->parsed()) vista::cmd_network(cfg, std::cout);
        else if (outcomes->parsed()) vista::cmd_outcomes(cfg, std::cout);
        else if (pipeline->parsed()) vista::cmd_pipeline(cfg, std::cout);
    } catch (const vista::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
