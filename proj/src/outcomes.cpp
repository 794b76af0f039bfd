#include "vista/outcomes.hpp"

#include "csv_util.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace vista {

namespace {

using PatientRecords = std::map<std::string, std::vector<const AssessmentRecord*>>;

PatientRecords group_by_patient(std::span<const AssessmentRecord> assessments) {
    PatientRecords out;
    for (const auto& a : assessments) out[a.patient_id].push_back(&a);
    for (auto& [id, recs] : out) {
        std::stable_sort(recs.begin(), recs.end(), [](const AssessmentRecord* a, const AssessmentRecord* b) {
            if (a->week != b->week) return a->week < b->week;
            return a->recorded_week < b->recorded_week;
        });
    }
    return out;
}

struct BaselineFinal {
    const AssessmentRecord* baseline = nullptr;
    const AssessmentRecord* final = nullptr;
};

BaselineFinal find_baseline_final(const std::vector<const AssessmentRecord*>& recs, const OutcomeThresholds& t) {
    BaselineFinal bf;
    for (const auto* r : recs) {
        if (r->week == 0 && !bf.baseline) bf.baseline = r;
        if (r->week >= t.first_final_week && r->week <= t.last_final_week) bf.final = r;
    }
    return bf;
}

int total(const AssessmentRecord& r, Instrument i) { return i == Instrument::Phq9 ? r.phq9_total : r.gad7_total; }

const char* flag(bool b) { return b ? "1" : "0"; }

constexpr std::array<const char*, 4> kOutcomeNames = {"significant_change", "response", "remission", "deterioration"};

bool outcome_value(const OutcomeRecord& r, std::size_t k) {
    switch (k) {
        case 0: return r.significant_change;
        case 1: return r.response;
        case 2: return r.remission;
        default: return r.deterioration;
    }
}

}  // namespace

std::string_view instrument_name(Instrument i) { return i == Instrument::Phq9 ? "PHQ-9" : "GAD-7"; }

OutcomeLabels label_outcomes(std::span<const AssessmentRecord> assessments, const OutcomeThresholds& t) {
    OutcomeLabels out;
    for (const auto& [id, recs] : group_by_patient(assessments)) {
        const BaselineFinal bf = find_baseline_final(recs, t);
        if (!bf.baseline) {
            out.excluded.emplace_back(id, "missing baseline assessment");
            continue;
        }
        if (!bf.final) {
            out.excluded.emplace_back(id, "no assessment in weeks " + std::to_string(t.first_final_week) + "-" +
                                              std::to_string(t.last_final_week));
            continue;
        }
        for (Instrument inst : kInstruments) {
            OutcomeRecord r;
            r.patient_id = id;
            r.instrument = inst;
            r.baseline = total(*bf.baseline, inst);
            r.final_total = total(*bf.final, inst);
            const int drop = r.baseline - r.final_total;
            r.significant_change =
                r.baseline >= t.clinical_cutoff && r.final_total < t.clinical_cutoff && drop >= t.min_change;
            r.response = r.baseline > 0 && drop >= t.response_fraction * r.baseline;
            r.remission = r.final_total < t.remission_cutoff;
            r.deterioration = -drop >= t.min_change;
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<ItemComparisonRow> baseline_item_comparison(std::span<const AssessmentRecord> assessments,
                                                        const std::map<std::string, int>& labels, Timepoint when,
                                                        const OutcomeThresholds& t) {
    constexpr std::size_t kItems = kPhq9Items + kGad7Items;
    std::array<std::array<std::vector<double>, 2>, kItems> scores;
    for (const auto& [id, recs] : group_by_patient(assessments)) {
        const auto it = labels.find(id);
        if (it == labels.end() || it->second < 0 || it->second > 1) continue;
        const BaselineFinal bf = find_baseline_final(recs, t);
        const AssessmentRecord* r = when == Timepoint::Initial ? bf.baseline : bf.final;
        if (!r) continue;
        for (std::size_t j = 0; j < kItems; ++j) {
            scores[j][static_cast<std::size_t>(it->second)].push_back(static_cast<double>(r->item(j)));
        }
    }
    if (scores[0][0].empty() || scores[0][1].empty()) {
        throw DataError("item comparison needs assessments from both clusters");
    }

    std::vector<ItemComparisonRow> rows(kItems);
    std::vector<double> raw(kItems);
    for (std::size_t j = 0; j < kItems; ++j) {
        ItemComparisonRow& row = rows[j];
        row.item = std::string(kItemNames[j]);
        row.timepoint = when;
        const auto mw = stats::mann_whitney_u(scores[j][0], scores[j][1]);
        row.u = mw.u_x;
        row.p_raw = mw.p;
        raw[j] = mw.p;
        for (std::size_t c = 0; c < 2; ++c) {
            const auto& v = scores[j][c];
            row.n[c] = v.size();
            double sum = 0.0;
            double above = 0.0;
            for (double s : v) {
                sum += s;
                if (s >= 2.0) above += 1.0;
            }
            row.mean[c] = sum / static_cast<double>(v.size());
            row.share_at_threshold[c] = above / static_cast<double>(v.size());
        }
    }
    const std::vector<double> adjusted = stats::bonferroni(raw);
    for (std::size_t j = 0; j < kItems; ++j) rows[j].p_bonferroni = adjusted[j];
    return rows;
}

std::vector<OutcomeRegression> outcome_regressions(const OutcomeLabels& outcomes, const std::map<std::string, int>& labels,
                                                   int num_clusters, const std::vector<Demographics>* demographics,
                                                   const CovariateReferences& refs) {
    std::map<std::string, const Demographics*> demo;
    if (demographics) {
        for (const auto& d : *demographics) demo[d.patient_id] = &d;
    }

    std::vector<OutcomeRegression> out;
    for (Instrument inst : kInstruments) {
        std::vector<const OutcomeRecord*> recs;
        for (const auto& r : outcomes.records) {
            if (r.instrument == inst && labels.contains(r.patient_id)) recs.push_back(&r);
        }
        const std::size_t n = recs.size();

        std::vector<stats::NumericCovariate> numeric;
        for (int l = 1; l < num_clusters; ++l) {
            stats::NumericCovariate c{"cluster=" + std::to_string(l), std::vector<double>(n)};
            for (std::size_t i = 0; i < n; ++i) c.values[i] = labels.at(recs[i]->patient_id) == l ? 1.0 : 0.0;
            numeric.push_back(std::move(c));
        }
        std::vector<stats::CategoricalCovariate> categorical;
        if (demographics) {
            stats::CategoricalCovariate age{"age_group", std::vector<std::string>(n), refs.age_group};
            stats::CategoricalCovariate gender{"gender", std::vector<std::string>(n), refs.gender};
            stats::CategoricalCovariate edu{"education", std::vector<std::string>(n), refs.education};
            for (std::size_t i = 0; i < n; ++i) {
                const auto it = demo.find(recs[i]->patient_id);
                if (it == demo.end()) continue;
                age.values[i] = it->second->age_group;
                gender.values[i] = it->second->gender;
                edu.values[i] = it->second->education;
            }
            categorical = {std::move(age), std::move(gender), std::move(edu)};
        }
        const stats::Design design = stats::build_design(n, numeric, categorical);

        for (std::size_t k = 0; k < kOutcomeNames.size(); ++k) {
            OutcomeRegression reg;
            reg.outcome = kOutcomeNames[k];
            reg.instrument = inst;
            std::vector<double> y(design.rows.size());
            for (std::size_t r = 0; r < design.rows.size(); ++r) y[r] = outcome_value(*recs[design.rows[r]], k) ? 1.0 : 0.0;
            try {
                stats::RegressionResult res = stats::logistic_fit(design.X, y, design.names);
                res.reference_levels = design.reference_levels;
                reg.result = std::move(res);
            } catch (const DataError& e) {
                reg.note = e.what();
            }
            out.push_back(std::move(reg));
        }
    }
    return out;
}

void write_outcomes_csv(std::ostream& out, const OutcomeLabels& outcomes) {
    out << "patient_id,instrument,baseline,final,significant_change,response,remission,deterioration\n";
    for (const auto& r : outcomes.records) {
        out << csv::quote(r.patient_id) << ',' << instrument_name(r.instrument) << ',' << r.baseline << ','
            << r.final_total << ',' << flag(r.significant_change) << ',' << flag(r.response) << ','
            << flag(r.remission) << ',' << flag(r.deterioration) << '\n';
    }
}

void write_regressions_csv(std::ostream& out, const std::vector<OutcomeRegression>& regressions) {
    out << "outcome,measure,term,odds_ratio,ci_low,ci_high,p,n,separated,note\n";
    const std::string nan = csv::number(std::nan(""));
    for (const auto& reg : regressions) {
        if (!reg.result) {
            out << reg.outcome << ',' << instrument_name(reg.instrument) << ",," << nan << ',' << nan << ',' << nan
                << ',' << nan << ",0,0," << csv::quote(reg.note) << '\n';
            continue;
        }
        const auto& r = *reg.result;
        for (std::size_t j = 1; j < r.names.size(); ++j) {
            const auto c = static_cast<Eigen::Index>(j);
            out << reg.outcome << ',' << instrument_name(reg.instrument) << ',' << csv::quote(r.names[j]) << ','
                << csv::number(r.odds_ratios[c]) << ',' << csv::number(r.ci_low[c]) << ','
                << csv::number(r.ci_high[c]) << ',' << csv::number(r.p_values[c]) << ',' << r.n << ','
                << flag(r.separated) << ',' << (r.converged ? "" : "not converged") << '\n';
        }
    }
}

void write_item_comparison_csv(std::ostream& out, const std::vector<ItemComparisonRow>& rows) {
    out << "item,timepoint,mean_cluster0,mean_cluster1,share_ge2_cluster0,share_ge2_cluster1,u,p_raw,p_bonferroni,"
           "n_cluster0,n_cluster1\n";
    for (const auto& r : rows) {
        out << r.item << ',' << (r.timepoint == Timepoint::Initial ? "I" : "F") << ',' << csv::number(r.mean[0])
            << ',' << csv::number(r.mean[1]) << ',' << csv::number(r.share_at_threshold[0]) << ','
            << csv::number(r.share_at_threshold[1]) << ',' << csv::number(r.u) << ',' << csv::number(r.p_raw) << ','
            << csv::number(r.p_bonferroni) << ',' << r.n[0] << ',' << r.n[1] << '\n';
    }
}

}  // namespace vista
