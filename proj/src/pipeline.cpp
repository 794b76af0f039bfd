#include "vista/pipeline.hpp"

#include "vista/model_io.hpp"
#include "vista/network.hpp"
#include "vista/outcomes.hpp"
#include "vista/synthetic.hpp"

#include "csv_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#ifndef VISTA_VERSION
#define VISTA_VERSION "0.0.0"
#endif

namespace vista {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string init_name(InitStrategy s) { return s == InitStrategy::KMeans ? "kmeans" : "perturbed"; }

std::string gap_mode_name(ingest::GapRuleMode m) {
    return m == ingest::GapRuleMode::SkipIfFewer ? "skip" : "available_pairs";
}

template <class T>
T get_as(const ojson& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const ojson::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
    }
}

void check_keys(const ojson& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw UsageError("config section '" + where + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw UsageError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

fs::path out_path(const PipelineConfig& cfg, const char* name) { return cfg.output_dir / name; }

void ensure_output_dir(const PipelineConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir)) {
        throw DataError("cannot create output directory '" + cfg.output_dir.string() + "'");
    }
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

void require_path(const fs::path& p, const char* what) {
    if (p.empty()) throw UsageError(std::string("missing required input: ") + what);
    if (!fs::exists(p)) throw DataError(std::string(what) + " file '" + p.string() + "' does not exist");
}

std::uint64_t require_seed(const PipelineConfig& cfg) {
    if (!cfg.seed) throw UsageError("a seed is required (--seed)");
    return *cfg.seed;
}

FitConfig fit_config(const PipelineConfig& cfg) {
    FitConfig f = cfg.fit;
    f.seed = require_seed(cfg);
    f.threads = cfg.threads;
    try {
        f.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return f;
}

std::vector<TimeSeries> load_series(const fs::path& path, std::ostream& log) {
    require_path(path, "series");
    auto parsed = ingest::parse_emotion_series(path);
    for (std::size_t i = 0; i < parsed.diagnostics.size() && i < 10; ++i) log << "skipped " << parsed.diagnostics[i] << '\n';
    for (const auto& w : parsed.warnings) log << "warning: " << w << '\n';
    return std::move(parsed.series);
}

std::vector<AssessmentRecord> load_assessments(const fs::path& path, std::ostream& log) {
    require_path(path, "assessments");
    auto parsed = ingest::parse_assessments(path);
    for (std::size_t i = 0; i < parsed.diagnostics.size() && i < 10; ++i) log << "rejected " << parsed.diagnostics[i] << '\n';
    if (parsed.rejected > 0) log << "warning: " << parsed.rejected << " assessment rows rejected\n";
    return std::move(parsed.records);
}

std::vector<std::string> ids_of(std::span<const TimeSeries> series) {
    std::vector<std::string> ids;
    for (const auto& s : series) ids.push_back(s.patient_id);
    return ids;
}

void write_labels_file(const fs::path& path, std::span<const TimeSeries> series, std::span<const int> labels) {
    auto out = open_output(path);
    const auto ids = ids_of(series);
    ingest::write_labels(out, ids, labels);
}

void write_responsibilities(const fs::path& path, std::span<const TimeSeries> series, const Matrix& resp) {
    auto out = open_output(path);
    out << "series_id";
    for (Eigen::Index l = 0; l < resp.cols(); ++l) out << ",r" << l;
    out << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << csv::quote(series[i].patient_id);
        for (Eigen::Index l = 0; l < resp.cols(); ++l) out << ',' << csv::number(resp(static_cast<Eigen::Index>(i), l));
        out << '\n';
    }
}

void log_cluster_sizes(std::ostream& log, std::span<const int> labels, std::size_t M) {
    std::vector<std::size_t> counts(M, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    log << "cluster sizes:";
    for (std::size_t l = 0; l < M; ++l) log << ' ' << counts[l];
    log << '\n';
}

void score_against_truth(const PipelineConfig& cfg, std::span<const TimeSeries> series, std::span<const int> labels,
                         std::ostream& log) {
    if (cfg.truth_labels.empty()) return;
    require_path(cfg.truth_labels, "truth labels");
    const auto truth = ingest::parse_labels(cfg.truth_labels);
    std::vector<int> a, b;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto it = truth.find(series[i].patient_id);
        if (it == truth.end()) continue;
        a.push_back(labels[i]);
        b.push_back(it->second);
    }
    if (a.empty()) throw DataError("no series ids match the truth labels");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", adjusted_rand_index(a, b));
    log << "ARI vs truth (" << a.size() << " series): " << buf << '\n';
}

FittedMixture run_fit(const PipelineConfig& cfg, std::span<const TimeSeries> series, std::ostream& log) {
    if (series.empty()) throw DataError("cohort is empty; nothing to fit");
    const FitConfig f = fit_config(cfg);
    FittedMixture model = fit(series, f);
    log << "fit: " << model.iterations << " iterations, " << (model.converged ? "converged" : "not converged")
        << ", log-likelihood " << csv::number(model.loglik_trace.back()) << '\n';
    for (const auto& w : model.warnings) log << "warning: " << w << '\n';
    return model;
}

void write_fit_outputs(const PipelineConfig& cfg, std::span<const TimeSeries> series, const FittedMixture& model) {
    write_model(out_path(cfg, files::kModel), model, cfg.hash());
    write_labels_file(out_path(cfg, files::kLabels), series, model.labels);
    auto out = open_output(out_path(cfg, files::kLoglik));
    out << "iteration,loglik\n";
    for (std::size_t i = 0; i < model.loglik_trace.size(); ++i) out << i << ',' << csv::number(model.loglik_trace[i]) << '\n';
}

void write_network_outputs(const PipelineConfig& cfg, const FittedMixture& model, std::ostream& log) {
    if (!(cfg.network_delta_weeks > 0.0)) throw UsageError("network delta must be > 0");
    std::vector<TemporalNetwork> nets;
    std::vector<Vector> scores;
    for (const auto& c : model.clusters) {
        nets.push_back(network_for_cluster(c, cfg.network_delta_weeks));
        scores.push_back(out_expected_influence(nets.back()));
    }
    const CentralityRanking ranking = centrality_ranking(scores);
    auto edges = open_output(out_path(cfg, files::kEdges));
    write_edges_csv(edges, nets, cfg.edge_threshold);
    auto cent = open_output(out_path(cfg, files::kCentrality));
    write_centrality_csv(cent, scores, ranking);
    for (std::size_t l = 0; l < ranking.order.size(); ++l) {
        const auto top = ranking.order[l].front();
        const Eigen::Index n = scores[l].size();
        log << "cluster " << l << " most central: "
            << (n == static_cast<Eigen::Index>(kNumEmotions) ? std::string(kEmotionNames[static_cast<std::size_t>(top)])
                                                             : "node" + std::to_string(top))
            << '\n';
    }
}

void write_outcome_outputs(const PipelineConfig& cfg, std::span<const AssessmentRecord> assessments,
                           const std::map<std::string, int>& labels, const std::vector<Demographics>* demographics,
                           std::ostream& log) {
    std::vector<AssessmentRecord> kept;
    for (const auto& a : assessments) {
        if (labels.contains(a.patient_id)) kept.push_back(a);
    }
    const OutcomeLabels outcomes = label_outcomes(kept);
    if (!outcomes.excluded.empty()) log << "outcomes: " << outcomes.excluded.size() << " patients excluded\n";
    int M = 0;
    for (const auto& [id, l] : labels) {
        if (l < 0) throw DataError("negative cluster label for '" + id + "'");
        M = std::max(M, l + 1);
    }
    auto out = open_output(out_path(cfg, files::kOutcomes));
    write_outcomes_csv(out, outcomes);
    auto reg = open_output(out_path(cfg, files::kRegressions));
    write_regressions_csv(reg, outcome_regressions(outcomes, labels, M, demographics));

    std::vector<ItemComparisonRow> rows;
    if (M >= 2) {
        for (Timepoint when : {Timepoint::Initial, Timepoint::Final}) {
            try {
                auto r = baseline_item_comparison(kept, labels, when);
                rows.insert(rows.end(), r.begin(), r.end());
            } catch (const DataError& e) {
                log << "warning: item comparison skipped: " << e.what() << '\n';
            }
        }
        if (M > 2) log << "note: item comparison uses clusters 0 and 1 only\n";
    } else {
        log << "note: item comparison needs two clusters\n";
    }
    auto items = open_output(out_path(cfg, files::kItems));
    write_item_comparison_csv(items, rows);
}

class StageTimer {
public:
    explicit StageTimer(ojson& stages) : stages_(stages) {}
    template <class Fn>
    void run(const std::string& name, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        ojson extra = ojson::object();
        fn(extra);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        ojson e;
        e["stage"] = name;
        e["seconds"] = dt.count();
        for (auto& [k, v] : extra.items()) e[k] = v;
        stages_.push_back(std::move(e));
    }

private:
    ojson& stages_;
};

}  // namespace

std::string version() { return VISTA_VERSION; }

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(doc, "",
               {"series", "assessments", "diagnoses", "demographics", "labels", "truth_labels", "model", "output_dir",
                "seed", "threads", "fit", "network", "rules", "simulate"});
    PipelineConfig cfg;
    auto path = [&](const char* key, fs::path& dst) {
        if (doc.contains(key)) dst = get_as<std::string>(doc[key], key);
    };
    path("series", cfg.series);
    path("assessments", cfg.assessments);
    path("diagnoses", cfg.diagnoses);
    path("demographics", cfg.demographics);
    path("labels", cfg.labels);
    path("truth_labels", cfg.truth_labels);
    path("model", cfg.model);
    path("output_dir", cfg.output_dir);
    if (doc.contains("seed")) cfg.seed = get_as<std::uint64_t>(doc["seed"], "seed");
    if (doc.contains("threads")) cfg.threads = get_as<std::size_t>(doc["threads"], "threads");

    if (doc.contains("fit")) {
        const ojson& f = doc["fit"];
        check_keys(f, "fit", {"clusters", "latent_dim", "max_iters", "tol", "min_weight", "init", "perturbation"});
        if (f.contains("clusters")) cfg.fit.clusters = get_as<int>(f["clusters"], "fit.clusters");
        if (f.contains("latent_dim")) cfg.fit.latent_dim = get_as<Eigen::Index>(f["latent_dim"], "fit.latent_dim");
        if (f.contains("max_iters")) cfg.fit.max_iters = get_as<int>(f["max_iters"], "fit.max_iters");
        if (f.contains("tol")) cfg.fit.tol = get_as<double>(f["tol"], "fit.tol");
        if (f.contains("min_weight")) cfg.fit.min_weight = get_as<double>(f["min_weight"], "fit.min_weight");
        if (f.contains("perturbation")) cfg.fit.perturbation = get_as<double>(f["perturbation"], "fit.perturbation");
        if (f.contains("init")) {
            const auto s = get_as<std::string>(f["init"], "fit.init");
            if (s == "kmeans") cfg.fit.init = InitStrategy::KMeans;
            else if (s == "perturbed") cfg.fit.init = InitStrategy::Perturbed;
            else throw UsageError("fit.init must be 'kmeans' or 'perturbed'");
        }
    }
    if (doc.contains("network")) {
        const ojson& n = doc["network"];
        check_keys(n, "network", {"delta_weeks", "edge_threshold"});
        if (n.contains("delta_weeks")) cfg.network_delta_weeks = get_as<double>(n["delta_weeks"], "network.delta_weeks");
        if (n.contains("edge_threshold") && !n["edge_threshold"].is_null()) {
            cfg.edge_threshold = get_as<double>(n["edge_threshold"], "network.edge_threshold");
        }
    }
    if (doc.contains("rules")) {
        const ojson& r = doc["rules"];
        check_keys(r, "rules",
                   {"min_baseline_total", "min_talk_turns", "gap_low_weeks", "gap_high_weeks", "gap_assessments",
                    "gap_mode", "require_transcript", "excluded_diagnoses"});
        auto& R = cfg.rules;
        if (r.contains("min_baseline_total")) R.min_baseline_total = get_as<int>(r["min_baseline_total"], "rules.min_baseline_total");
        if (r.contains("min_talk_turns")) R.min_talk_turns = get_as<std::size_t>(r["min_talk_turns"], "rules.min_talk_turns");
        if (r.contains("gap_low_weeks")) R.gap_low_weeks = get_as<double>(r["gap_low_weeks"], "rules.gap_low_weeks");
        if (r.contains("gap_high_weeks")) R.gap_high_weeks = get_as<double>(r["gap_high_weeks"], "rules.gap_high_weeks");
        if (r.contains("gap_assessments")) R.gap_assessments = get_as<std::size_t>(r["gap_assessments"], "rules.gap_assessments");
        if (r.contains("require_transcript")) R.require_transcript = get_as<bool>(r["require_transcript"], "rules.require_transcript");
        if (r.contains("gap_mode")) {
            const auto s = get_as<std::string>(r["gap_mode"], "rules.gap_mode");
            if (s == "skip") R.gap_mode = ingest::GapRuleMode::SkipIfFewer;
            else if (s == "available_pairs") R.gap_mode = ingest::GapRuleMode::AvailablePairs;
            else throw UsageError("rules.gap_mode must be 'skip' or 'available_pairs'");
        }
        if (r.contains("excluded_diagnoses")) {
            const auto codes = get_as<std::vector<std::string>>(r["excluded_diagnoses"], "rules.excluded_diagnoses");
            R.excluded_diagnoses = std::set<std::string>(codes.begin(), codes.end());
        }
    }
    if (doc.contains("simulate")) {
        const ojson& s = doc["simulate"];
        check_keys(s, "simulate", {"preset", "n", "with_assessments", "clip"});
        if (s.contains("preset")) cfg.simulate.preset = get_as<std::string>(s["preset"], "simulate.preset");
        if (s.contains("n")) cfg.simulate.n = get_as<std::size_t>(s["n"], "simulate.n");
        if (s.contains("with_assessments")) cfg.simulate.with_assessments = get_as<bool>(s["with_assessments"], "simulate.with_assessments");
        if (s.contains("clip") && !s["clip"].is_null()) cfg.simulate.clip = get_as<bool>(s["clip"], "simulate.clip");
    }
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string PipelineConfig::canonical_json() const {
    ojson doc;
    doc["series"] = series.string();
    doc["assessments"] = assessments.string();
    doc["diagnoses"] = diagnoses.string();
    doc["demographics"] = demographics.string();
    doc["seed"] = seed ? ojson(*seed) : ojson(nullptr);
    ojson f;
    f["clusters"] = fit.clusters;
    f["latent_dim"] = fit.latent_dim;
    f["max_iters"] = fit.max_iters;
    f["tol"] = fit.tol;
    f["min_weight"] = fit.min_weight;
    f["init"] = init_name(fit.init);
    f["perturbation"] = fit.perturbation;
    doc["fit"] = std::move(f);
    ojson n;
    n["delta_weeks"] = network_delta_weeks;
    n["edge_threshold"] = edge_threshold ? ojson(*edge_threshold) : ojson(nullptr);
    doc["network"] = std::move(n);
    ojson r;
    r["min_baseline_total"] = rules.min_baseline_total;
    r["min_talk_turns"] = rules.min_talk_turns;
    r["gap_low_weeks"] = rules.gap_low_weeks;
    r["gap_high_weeks"] = rules.gap_high_weeks;
    r["gap_assessments"] = rules.gap_assessments;
    r["gap_mode"] = gap_mode_name(rules.gap_mode);
    r["require_transcript"] = rules.require_transcript;
    r["excluded_diagnoses"] = std::vector<std::string>(rules.excluded_diagnoses.begin(), rules.excluded_diagnoses.end());
    doc["rules"] = std::move(r);
    return doc.dump();
}

std::string PipelineConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json())));
    return buf;
}

std::string cmd_simulate(const PipelineConfig& cfg, std::ostream& log) {
    const std::uint64_t seed = require_seed(cfg);
    if (cfg.simulate.n == 0) throw UsageError("--n must be at least 1");
    synthetic::CohortSpec spec;
    if (cfg.simulate.preset == "paper-shaped") {
        spec = synthetic::paper_shaped_preset(cfg.simulate.n, seed);
    } else if (cfg.simulate.preset == "well-separated") {
        spec = synthetic::well_separated_preset(cfg.simulate.n, seed);
    } else {
        throw UsageError("unknown preset '" + cfg.simulate.preset + "' (paper-shaped or well-separated)");
    }
    spec.clip = cfg.simulate.clip.value_or(true);
    ensure_output_dir(cfg);

    const synthetic::Cohort cohort = synthetic::sample_cohort(spec, cfg.threads);
    {
        auto out = open_output(out_path(cfg, files::kSeries));
        ingest::write_emotion_series(out, cohort.series);
    }
    write_labels_file(out_path(cfg, files::kTruthLabels), cohort.series, cohort.labels);
    const auto ids = ids_of(cohort.series);
    if (cfg.simulate.with_assessments) {
        const auto assessments = synthetic::simulate_assessments(ids, cohort.labels, seed);
        auto out = open_output(out_path(cfg, files::kAssessments));
        ingest::write_assessments(out, assessments);
        const auto demo = synthetic::simulate_demographics(ids, seed);
        auto dout = open_output(out_path(cfg, files::kDemographics));
        ingest::write_demographics(dout, demo);
    }

    std::vector<std::size_t> lengths;
    for (const auto& s : cohort.series) lengths.push_back(s.size());
    std::sort(lengths.begin(), lengths.end());
    const double median = lengths.size() % 2 == 1
                              ? static_cast<double>(lengths[lengths.size() / 2])
                              : 0.5 * static_cast<double>(lengths[lengths.size() / 2 - 1] + lengths[lengths.size() / 2]);
    std::ostringstream summary;
    summary << "simulated n=" << cohort.series.size() << " dims=" << cohort.series.front().dim()
            << " median_turns=" << median << " clipped_fraction=" << csv::number(cohort.clipped_fraction());
    log << summary.str() << '\n';
    return summary.str();
}

void cmd_ingest(const PipelineConfig& cfg, std::ostream& log) {
    const auto series = load_series(cfg.series, log);
    const auto assessments = load_assessments(cfg.assessments, log);
    std::map<std::string, std::set<std::string>> diagnoses;
    if (!cfg.diagnoses.empty()) {
        require_path(cfg.diagnoses, "diagnoses");
        diagnoses = ingest::parse_diagnoses(cfg.diagnoses);
    }
    const auto result =
        ingest::filter_cohort(series, assessments, cfg.rules, cfg.diagnoses.empty() ? nullptr : &diagnoses);
    ensure_output_dir(cfg);

    const std::set<std::string> eligible(result.eligible.begin(), result.eligible.end());
    std::vector<TimeSeries> kept;
    for (const auto& s : series) {
        if (eligible.contains(s.patient_id)) kept.push_back(s);
    }
    {
        auto out = open_output(out_path(cfg, files::kCohort));
        ingest::write_emotion_series(out, kept);
    }
    {
        auto out = open_output(out_path(cfg, files::kFunnel));
        ingest::write_funnel_json(out, result.funnel);
    }
    auto out = open_output(out_path(cfg, files::kWindows));
    out << "patient_id,week,lower_day,upper_day,turns\n";
    for (const auto& s : kept) {
        for (const auto& w : ingest::anchor_talk_turns(s, assessments)) {
            out << csv::quote(s.patient_id) << ',' << w.week << ',' << csv::number(std::max(w.lower_day, w.previous_day))
                << ',' << csv::number(w.upper_day) << ',' << w.turns.size() << '\n';
        }
    }
    for (const auto& st : result.funnel) log << "funnel " << st.stage << ": excluded " << st.excluded << ", remaining " << st.remaining << '\n';
}

void cmd_fit(const PipelineConfig& cfg, std::ostream& log) {
    fit_config(cfg);
    const auto series = load_series(cfg.series, log);
    ensure_output_dir(cfg);
    const FittedMixture model = run_fit(cfg, series, log);
    write_fit_outputs(cfg, series, model);
    log_cluster_sizes(log, model.labels, model.num_clusters());
    score_against_truth(cfg, series, model.labels, log);
}

void cmd_assign(const PipelineConfig& cfg, std::ostream& log) {
    require_path(cfg.model, "model");
    const ModelFile mf = read_model(cfg.model);
    const auto series = load_series(cfg.series, log);
    if (series.empty()) throw DataError("no series to assign");
    ensure_output_dir(cfg);
    const Assignment a = assign(series, mf.model, cfg.threads);
    write_labels_file(out_path(cfg, files::kLabels), series, a.labels);
    write_responsibilities(out_path(cfg, files::kResponsibilities), series, a.responsibilities);
    log_cluster_sizes(log, a.labels, mf.model.num_clusters());
    score_against_truth(cfg, series, a.labels, log);
}

void cmd_network(const PipelineConfig& cfg, std::ostream& log) {
    require_path(cfg.model, "model");
    const ModelFile mf = read_model(cfg.model);
    ensure_output_dir(cfg);
    write_network_outputs(cfg, mf.model, log);
}

void cmd_outcomes(const PipelineConfig& cfg, std::ostream& log) {
    const auto assessments = load_assessments(cfg.assessments, log);
    require_path(cfg.labels, "labels");
    const auto labels = ingest::parse_labels(cfg.labels);
    std::vector<Demographics> demo;
    if (!cfg.demographics.empty()) {
        require_path(cfg.demographics, "demographics");
        demo = ingest::parse_demographics(cfg.demographics);
    }
    ensure_output_dir(cfg);
    write_outcome_outputs(cfg, assessments, labels, cfg.demographics.empty() ? nullptr : &demo, log);
}

void cmd_pipeline(const PipelineConfig& cfg, std::ostream& log) {
    const std::uint64_t seed = require_seed(cfg);
    fit_config(cfg);
    require_path(cfg.series, "series");
    require_path(cfg.assessments, "assessments");
    ensure_output_dir(cfg);

    ojson stages = ojson::array();
    StageTimer timer(stages);
    std::vector<TimeSeries> series;
    std::vector<AssessmentRecord> assessments;
    std::vector<Demographics> demo;
    std::map<std::string, std::set<std::string>> diagnoses;
    ingest::CohortFilterResult filtered;
    std::vector<TimeSeries> cohort;
    FittedMixture model;
    std::map<std::string, int> labels;

    timer.run("ingest", [&](ojson& extra) {
        series = load_series(cfg.series, log);
        assessments = load_assessments(cfg.assessments, log);
        if (!cfg.demographics.empty()) {
            require_path(cfg.demographics, "demographics");
            demo = ingest::parse_demographics(cfg.demographics);
        }
        if (!cfg.diagnoses.empty()) {
            require_path(cfg.diagnoses, "diagnoses");
            diagnoses = ingest::parse_diagnoses(cfg.diagnoses);
        }
        extra["series"] = series.size();
        extra["assessments"] = assessments.size();
    });
    timer.run("filter", [&](ojson& extra) {
        filtered = ingest::filter_cohort(series, assessments, cfg.rules, cfg.diagnoses.empty() ? nullptr : &diagnoses);
        const std::set<std::string> eligible(filtered.eligible.begin(), filtered.eligible.end());
        for (const auto& s : series) {
            if (eligible.contains(s.patient_id)) cohort.push_back(s);
        }
        auto out = open_output(out_path(cfg, files::kCohort));
        ingest::write_emotion_series(out, cohort);
        auto fout = open_output(out_path(cfg, files::kFunnel));
        ingest::write_funnel_json(fout, filtered.funnel);
        extra["eligible"] = cohort.size();
        log << "cohort: " << cohort.size() << " of " << filtered.funnel.front().remaining << " patients eligible\n";
    });
    timer.run("fit", [&](ojson& extra) {
        const fs::path model_path = out_path(cfg, files::kModel);
        bool resumed = false;
        if (cfg.resume && fs::exists(model_path)) {
            try {
                ModelFile mf = read_model(model_path);
                if (mf.config_hash == cfg.hash()) {
                    model = std::move(mf.model);
                    resumed = true;
                    log << "fit: resumed from " << model_path.string() << '\n';
                } else {
                    log << "fit: configuration changed, refitting\n";
                }
            } catch (const DataError& e) {
                log << "fit: existing model unreadable (" << e.what() << "), refitting\n";
            }
        }
        if (!resumed) {
            model = run_fit(cfg, cohort, log);
            write_model(model_path, model, cfg.hash());
            auto out = open_output(out_path(cfg, files::kLoglik));
            out << "iteration,loglik\n";
            for (std::size_t i = 0; i < model.loglik_trace.size(); ++i) out << i << ',' << csv::number(model.loglik_trace[i]) << '\n';
        }
        extra["resumed"] = resumed;
        extra["iterations"] = model.iterations;
        extra["converged"] = model.converged;
    });
    timer.run("assign", [&](ojson&) {
        const Assignment a = assign(cohort, model, cfg.threads);
        write_labels_file(out_path(cfg, files::kLabels), cohort, a.labels);
        write_responsibilities(out_path(cfg, files::kResponsibilities), cohort, a.responsibilities);
        for (std::size_t i = 0; i < cohort.size(); ++i) labels[cohort[i].patient_id] = a.labels[i];
        log_cluster_sizes(log, a.labels, model.num_clusters());
        score_against_truth(cfg, cohort, a.labels, log);
    });
    timer.run("network", [&](ojson&) { write_network_outputs(cfg, model, log); });
    timer.run("outcomes", [&](ojson&) {
        write_outcome_outputs(cfg, assessments, labels, cfg.demographics.empty() ? nullptr : &demo, log);
    });

    ojson manifest;
    manifest["tool"] = "vista";
    manifest["schema_version"] = 1;
    ojson versions;
    versions["vista"] = version();
    versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
    versions["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    versions["compiler"] = __VERSION__;
    manifest["versions"] = std::move(versions);
    manifest["config_hash"] = cfg.hash();
    manifest["config"] = ojson::parse(cfg.canonical_json());
    manifest["seed"] = seed;
    manifest["threads"] = cfg.threads;
    manifest["stages"] = std::move(stages);
    manifest["outputs"] = {files::kCohort,  files::kFunnel,     files::kModel,    files::kLoglik,
                           files::kLabels,  files::kResponsibilities, files::kEdges, files::kCentrality,
                           files::kOutcomes, files::kRegressions, files::kItems};
    auto out = open_output(out_path(cfg, files::kManifest));
    out << manifest.dump(2) << '\n';
}

}  // namespace vista
