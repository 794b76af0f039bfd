#include "vista/outcomes.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace vista;

namespace {

AssessmentRecord rec(const std::string& id, int week, int phq, int gad) {
    AssessmentRecord r;
    r.patient_id = id;
    r.week = week;
    r.recorded_week = week;
    for (std::size_t i = 0; i < kPhq9Items; ++i) {
        r.phq9_items[i] = std::min(3, std::max(0, phq - 3 * static_cast<int>(i)));
    }
    for (std::size_t i = 0; i < kGad7Items; ++i) {
        r.gad7_items[i] = std::min(3, std::max(0, gad - 3 * static_cast<int>(i)));
    }
    r.compute_totals();
    return r;
}

const OutcomeRecord& find(const OutcomeLabels& l, const std::string& id, Instrument inst) {
    for (const auto& r : l.records) {
        if (r.patient_id == id && r.instrument == inst) return r;
    }
    throw std::runtime_error("missing record");
}

}  // namespace

TEST_CASE("outcome label examples") {
    const std::vector<AssessmentRecord> a = {
        rec("a", 0, 15, 10), rec("a", 6, 12, 12), rec("a", 12, 8, 15),
        rec("b", 0, 12, 4),  rec("b", 3, 9, 4),
        rec("c", 0, 20, 2),  rec("c", 9, 4, 0),
    };
    const OutcomeLabels l = label_outcomes(a);
    REQUIRE(l.records.size() == 6);

    const OutcomeRecord& a_phq = find(l, "a", Instrument::Phq9);
    CHECK(a_phq.baseline == 15);
    CHECK(a_phq.final_total == 8);
    CHECK(a_phq.significant_change);
    CHECK_FALSE(a_phq.response);
    CHECK_FALSE(a_phq.remission);

    const OutcomeRecord& a_gad = find(l, "a", Instrument::Gad7);
    CHECK(a_gad.deterioration);
    CHECK_FALSE(a_gad.significant_change);

    const OutcomeRecord& b_phq = find(l, "b", Instrument::Phq9);
    CHECK_FALSE(b_phq.significant_change);
    CHECK_FALSE(b_phq.deterioration);

    const OutcomeRecord& b_gad = find(l, "b", Instrument::Gad7);
    CHECK_FALSE(b_gad.significant_change);
    CHECK(b_gad.remission);

    const OutcomeRecord& c_phq = find(l, "c", Instrument::Phq9);
    CHECK(c_phq.significant_change);
    CHECK(c_phq.response);
    CHECK(c_phq.remission);
    const OutcomeRecord& c_gad = find(l, "c", Instrument::Gad7);
    CHECK(c_gad.response);
    CHECK(c_gad.remission);
}

TEST_CASE("outcome labels ignore input order and report exclusions") {
    std::vector<AssessmentRecord> a = {rec("a", 0, 15, 10), rec("a", 6, 12, 12), rec("a", 12, 8, 15),
                                       rec("d", 3, 10, 10), rec("e", 0, 10, 10)};
    const OutcomeLabels first = label_outcomes(a);
    std::reverse(a.begin(), a.end());
    const OutcomeLabels second = label_outcomes(a);
    REQUIRE(first.records.size() == second.records.size());
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        CHECK(first.records[i].patient_id == second.records[i].patient_id);
        CHECK(first.records[i].final_total == second.records[i].final_total);
    }
    CHECK(first.excluded.size() == 2);
    CHECK(first.excluded == second.excluded);

    std::ostringstream out;
    write_outcomes_csv(out, first);
    CHECK(out.str().rfind("patient_id,instrument,baseline,final,significant_change,response,remission,deterioration\n",
                          0) == 0);
}

TEST_CASE("item comparison finds a shifted item") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> likert(0, 3);
    std::vector<AssessmentRecord> a;
    std::map<std::string, int> labels;
    for (int i = 0; i < 120; ++i) {
        AssessmentRecord r;
        r.patient_id = "p" + std::to_string(i);
        labels[r.patient_id] = i % 2;
        for (auto& v : r.phq9_items) v = likert(rng) / 2;
        for (auto& v : r.gad7_items) v = likert(rng) / 2;
        if (i % 2 == 1) r.phq9_items[1] = 2 + likert(rng) / 2;
        r.compute_totals();
        a.push_back(r);
        AssessmentRecord f = r;
        f.week = f.recorded_week = 12;
        a.push_back(f);
    }
    const auto rows = baseline_item_comparison(a, labels, Timepoint::Initial);
    REQUIRE(rows.size() == 16);
    CHECK(rows[1].item == "Mood");
    CHECK(rows[1].p_bonferroni < 0.001);
    CHECK(rows[1].share_at_threshold[1] == 1.0);
    CHECK(rows[1].n[0] == 60);
    for (const auto& row : rows) {
        CHECK(row.p_bonferroni == doctest::Approx(std::min(1.0, 16.0 * row.p_raw)));
    }
    const auto final_rows = baseline_item_comparison(a, labels, Timepoint::Final);
    CHECK(final_rows[1].p_raw == doctest::Approx(rows[1].p_raw));

    std::map<std::string, int> one_sided;
    for (const auto& [id, l] : labels) one_sided[id] = 0;
    CHECK_THROWS_AS(baseline_item_comparison(a, one_sided, Timepoint::Initial), DataError);
}

TEST_CASE("outcome regressions use cluster indicators") {
    std::vector<AssessmentRecord> a;
    std::map<std::string, int> labels;
    std::vector<Demographics> demo;
    std::mt19937_64 rng(42);
    for (int i = 0; i < 200; ++i) {
        const std::string id = "p" + std::to_string(i);
        const int cluster = i % 2;
        labels[id] = cluster;
        const int base = 10 + static_cast<int>(rng() % 10);
        const int drop = static_cast<int>(rng() % 8) + (cluster == 0 ? 2 : 0);
        a.push_back(rec(id, 0, base, base / 2 + 3));
        a.push_back(rec(id, 12, std::max(0, base - drop), std::max(0, base / 2 + 3 - drop + 1)));
        Demographics d;
        d.patient_id = id;
        d.age_group = i % 3 == 0 ? "18-25" : "26-35";
        d.gender = i % 4 == 0 ? "Male" : "Female";
        d.education = i % 5 == 0 ? "Some college" : "Bachelor or higher";
        demo.push_back(d);
    }
    const OutcomeLabels outcomes = label_outcomes(a);
    const auto plain = outcome_regressions(outcomes, labels, 2, nullptr);
    CHECK(plain.size() == 8);
    for (const auto& r : plain) {
        if (!r.result) continue;
        CHECK(r.result->names == std::vector<std::string>{"(Intercept)", "cluster=1"});
    }
    const auto adjusted = outcome_regressions(outcomes, labels, 2, &demo);
    bool any = false;
    for (const auto& r : adjusted) {
        if (!r.result) {
            CHECK_FALSE(r.note.empty());
            continue;
        }
        any = true;
        CHECK(r.result->names.size() == 5);
        CHECK(r.result->n == 200);
    }
    CHECK(any);
    std::ostringstream out;
    write_regressions_csv(out, adjusted);
    CHECK(out.str().rfind("outcome,measure,term,odds_ratio,ci_low,ci_high,p,n,separated,note\n", 0) == 0);
}
