#include "vista/ingest.hpp"

#include "csv_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace vista::ingest {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

// Builds a series from one JSON record; returns an error message on failure.
std::string series_from_json(const json& rec, TimeSeries& out) {
    if (!rec.is_object()) return "record is not an object";
    if (!rec.contains("patient_id") || !rec["patient_id"].is_string()) return "missing string patient_id";
    out.patient_id = rec["patient_id"].get<std::string>();
    if (!rec.contains("timestamps") || !rec["timestamps"].is_array()) return "missing timestamps array";
    if (!rec.contains("emotions") || !rec["emotions"].is_array()) return "missing emotions array";
    const json& ts = rec["timestamps"];
    const json& em = rec["emotions"];
    if (ts.size() != em.size()) {
        return std::to_string(ts.size()) + " timestamps but " + std::to_string(em.size()) + " emotion vectors";
    }
    const std::size_t T = ts.size();
    out.timestamps.resize(T);
    Eigen::Index dim = 0;
    for (std::size_t k = 0; k < T; ++k) {
        if (!ts[k].is_number()) return "timestamp " + std::to_string(k) + " is not a number";
        out.timestamps[k] = ts[k].get<double>();
        if (!em[k].is_array()) return "emotion vector " + std::to_string(k) + " is not an array";
        const auto d = static_cast<Eigen::Index>(em[k].size());
        if (k == 0) {
            dim = d;
            out.observations.resize(dim, static_cast<Eigen::Index>(T));
        } else if (d != dim) {
            return "emotion vector " + std::to_string(k) + " has length " + std::to_string(d) + ", expected " +
                   std::to_string(dim);
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            const json& v = em[k][static_cast<std::size_t>(j)];
            if (!v.is_number()) return "emotion value at step " + std::to_string(k) + " is not a number";
            out.observations(j, static_cast<Eigen::Index>(k)) = v.get<double>();
        }
    }
    if (T == 0) out.observations.resize(0, 0);
    return {};
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.size(); ++i) idx[csv::trim(header[i])] = i;
    return idx;
}

}  // namespace

SeriesParseResult parse_emotion_series(std::istream& in, const ValidationOptions& options) {
    SeriesParseResult out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t records = 0;
    std::size_t sum_warnings = 0;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        ++records;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            out.diagnostics.push_back(where + "malformed JSON (" + e.what() + ")");
            ++out.skipped;
            continue;
        }
        TimeSeries s;
        if (std::string err = series_from_json(rec, s); !err.empty()) {
            out.diagnostics.push_back(where + err);
            ++out.skipped;
            continue;
        }
        const ValidationReport report = validate_series(s, options);
        if (!report.ok()) {
            std::string msg = where + "patient '" + s.patient_id + "': ";
            for (std::size_t i = 0; i < report.violations.size(); ++i) {
                msg += (i ? "; " : "") + report.violations[i];
            }
            out.diagnostics.push_back(msg);
            ++out.skipped;
            continue;
        }
        if (!report.warnings.empty()) ++sum_warnings;
        out.series.push_back(std::move(s));
    }
    if (records == 0) out.warnings.push_back("no records in input");
    if (sum_warnings > 0) {
        out.warnings.push_back(std::to_string(sum_warnings) + " series have emotion vectors not summing to 1");
    }
    if (out.skipped > 0) out.warnings.push_back(std::to_string(out.skipped) + " records skipped");
    return out;
}

SeriesParseResult parse_emotion_series(const std::filesystem::path& path, const ValidationOptions& options) {
    auto in = open_input(path);
    return parse_emotion_series(in, options);
}

void write_emotion_series(std::ostream& out, std::span<const TimeSeries> series) {
    for (const auto& s : series) {
        nlohmann::ordered_json rec;
        rec["patient_id"] = s.patient_id;
        rec["timestamps"] = s.timestamps;
        json em = json::array();
        for (Eigen::Index k = 0; k < s.observations.cols(); ++k) {
            const Vector col = s.observations.col(k);
            em.push_back(std::vector<double>(col.data(), col.data() + col.size()));
        }
        rec["emotions"] = std::move(em);
        out << rec.dump() << '\n';
    }
}

AssessmentParseResult parse_assessments(std::istream& in) {
    AssessmentParseResult out;
    std::string line;
    if (!csv::next_line(in, line)) return out;
    const auto idx = header_index(csv::split(line));
    std::vector<std::string> required = {"patient_id", "week"};
    for (std::size_t i = 1; i <= kPhq9Items; ++i) required.push_back("phq" + std::to_string(i));
    for (std::size_t i = 1; i <= kGad7Items; ++i) required.push_back("gad" + std::to_string(i));
    std::vector<std::size_t> cols;
    for (const auto& name : required) {
        const auto it = idx.find(name);
        if (it == idx.end()) throw DataError("assessments header is missing column '" + name + "'");
        cols.push_back(it->second);
    }

    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        const auto f = csv::split(line);
        auto reject = [&](const std::string& why) {
            out.diagnostics.push_back(where + why);
            ++out.rejected;
        };
        if (f.size() < idx.size()) {
            reject("expected " + std::to_string(idx.size()) + " fields, found " + std::to_string(f.size()));
            continue;
        }
        AssessmentRecord r;
        r.patient_id = csv::trim(f[cols[0]]);
        if (r.patient_id.empty()) {
            reject("empty patient_id");
            continue;
        }
        if (!csv::parse_double(f[cols[1]], r.recorded_week) || !std::isfinite(r.recorded_week)) {
            reject("week is not a number");
            continue;
        }
        if (r.recorded_week < kMinRecordedWeek || r.recorded_week > kMaxRecordedWeek) {
            reject("week " + csv::trim(f[cols[1]]) + " outside the assessment schedule");
            continue;
        }
        r.week = bin_week(r.recorded_week);
        bool ok = true;
        for (std::size_t i = 0; i < kPhq9Items + kGad7Items && ok; ++i) {
            int v = 0;
            if (!csv::parse_int(f[cols[2 + i]], v)) {
                reject("item " + required[2 + i] + " is not an integer");
                ok = false;
            } else if (i < kPhq9Items) {
                r.phq9_items[i] = v;
            } else {
                r.gad7_items[i - kPhq9Items] = v;
            }
        }
        if (!ok) continue;
        try {
            r.compute_totals();
        } catch (const DataError& e) {
            reject(e.what());
            continue;
        }
        out.records.push_back(std::move(r));
    }
    return out;
}

AssessmentParseResult parse_assessments(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_assessments(in);
}

void write_assessments(std::ostream& out, std::span<const AssessmentRecord> records) {
    out << "patient_id,week";
    for (std::size_t i = 1; i <= kPhq9Items; ++i) out << ",phq" << i;
    for (std::size_t i = 1; i <= kGad7Items; ++i) out << ",gad" << i;
    out << '\n';
    for (const auto& r : records) {
        out << csv::quote(r.patient_id) << ',' << csv::number(r.recorded_week);
        for (int v : r.phq9_items) out << ',' << v;
        for (int v : r.gad7_items) out << ',' << v;
        out << '\n';
    }
}

std::map<std::string, std::set<std::string>> parse_diagnoses(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::map<std::string, std::set<std::string>> out;
    std::string line;
    if (!csv::next_line(in, line)) return out;
    const auto idx = header_index(csv::split(line));
    if (!idx.contains("patient_id") || !idx.contains("code")) {
        throw DataError("diagnoses header needs patient_id and code");
    }
    const std::size_t need = std::max(idx.at("patient_id"), idx.at("code"));
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        if (f.size() <= need) throw DataError("diagnoses line " + std::to_string(line_no) + " is short");
        out[csv::trim(f[idx.at("patient_id")])].insert(csv::trim(f[idx.at("code")]));
    }
    return out;
}

std::vector<Demographics> parse_demographics(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<Demographics> out;
    std::string line;
    if (!csv::next_line(in, line)) return out;
    const auto idx = header_index(csv::split(line));
    for (const char* name : {"patient_id", "age_group", "gender", "education"}) {
        if (!idx.contains(name)) throw DataError(std::string("demographics header is missing '") + name + "'");
    }
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        if (f.size() < idx.size()) throw DataError("demographics line " + std::to_string(line_no) + " is short");
        out.push_back({csv::trim(f[idx.at("patient_id")]), csv::trim(f[idx.at("age_group")]),
                       csv::trim(f[idx.at("gender")]), csv::trim(f[idx.at("education")])});
    }
    return out;
}

void write_demographics(std::ostream& out, std::span<const Demographics> rows) {
    out << "patient_id,age_group,gender,education\n";
    for (const auto& d : rows) {
        out << csv::quote(d.patient_id) << ',' << csv::quote(d.age_group) << ',' << csv::quote(d.gender) << ','
            << csv::quote(d.education) << '\n';
    }
}

std::map<std::string, int> parse_labels(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::map<std::string, int> out;
    std::string line;
    if (!csv::next_line(in, line)) return out;
    const auto idx = header_index(csv::split(line));
    if (!idx.contains("series_id") || !idx.contains("cluster")) throw DataError("labels header needs series_id and cluster");
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        int c = 0;
        if (f.size() < idx.size() || !csv::parse_int(f[idx.at("cluster")], c)) {
            throw DataError("labels line " + std::to_string(line_no) + " is malformed");
        }
        out[csv::trim(f[idx.at("series_id")])] = c;
    }
    return out;
}

void write_labels(std::ostream& out, std::span<const std::string> ids, std::span<const int> labels) {
    if (ids.size() != labels.size()) throw DimensionError("ids and labels differ in length");
    out << "series_id,cluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << csv::quote(ids[i]) << ',' << labels[i] << '\n';
}

// -----------------------------------------------------------------------------
// Eligibility
// -----------------------------------------------------------------------------

void CohortRules::validate() const {
    if (!(gap_low_weeks < gap_high_weeks)) throw Error("gap bounds must satisfy low < high");
    if (gap_low_weeks < 0.0 || min_baseline_total < 0) throw Error("cohort thresholds must be >= 0");
    if (gap_assessments < 2) throw Error("gap rule needs at least two assessments");
}

CohortFilterResult filter_cohort(std::span<const TimeSeries> series, std::span<const AssessmentRecord> assessments,
                                 const CohortRules& rules,
                                 const std::map<std::string, std::set<std::string>>* diagnoses) {
    rules.validate();
    std::map<std::string, std::size_t> turns;
    for (const auto& s : series) turns[s.patient_id] += s.size();
    std::map<std::string, std::vector<const AssessmentRecord*>> by_patient;
    for (const auto& a : assessments) by_patient[a.patient_id].push_back(&a);

    std::set<std::string> remaining;
    for (const auto& [id, n] : turns) remaining.insert(id);
    for (const auto& [id, recs] : by_patient) remaining.insert(id);

    CohortFilterResult out;
    out.funnel.push_back({"input", 0, remaining.size()});
    auto stage = [&](const std::string& name, auto&& excluded) {
        std::size_t count = 0;
        for (auto it = remaining.begin(); it != remaining.end();) {
            if (excluded(*it)) {
                out.exclusions[*it] = name;
                it = remaining.erase(it);
                ++count;
            } else {
                ++it;
            }
        }
        out.funnel.push_back({name, count, remaining.size()});
    };

    if (diagnoses) {
        stage("diagnosis", [&](const std::string& id) {
            const auto it = diagnoses->find(id);
            if (it == diagnoses->end()) return false;
            return std::any_of(it->second.begin(), it->second.end(),
                               [&](const std::string& code) { return rules.excluded_diagnoses.contains(code); });
        });
    }
    stage("transcript", [&](const std::string& id) { return rules.require_transcript && !turns.contains(id); });
    stage("assessment_gap", [&](const std::string& id) {
        const auto it = by_patient.find(id);
        if (it == by_patient.end()) return false;
        std::vector<double> weeks;
        for (const auto* r : it->second) weeks.push_back(r->recorded_week);
        std::sort(weeks.begin(), weeks.end());
        if (weeks.size() < rules.gap_assessments && rules.gap_mode == GapRuleMode::SkipIfFewer) return false;
        const std::size_t n = std::min(weeks.size(), rules.gap_assessments);
        for (std::size_t k = 1; k < n; ++k) {
            const double gap = weeks[k] - weeks[k - 1];
            if (gap > rules.gap_high_weeks || gap < rules.gap_low_weeks) return true;
        }
        return false;
    });
    stage("baseline_severity", [&](const std::string& id) {
        const auto it = by_patient.find(id);
        if (it == by_patient.end()) return true;
        for (const auto* r : it->second) {
            if (r->week == 0 && (r->phq9_total >= rules.min_baseline_total || r->gad7_total >= rules.min_baseline_total)) {
                return false;
            }
        }
        return true;
    });
    stage("engagement", [&](const std::string& id) {
        const auto it = turns.find(id);
        return it == turns.end() || it->second < rules.min_talk_turns;
    });

    out.eligible.assign(remaining.begin(), remaining.end());
    return out;
}

void write_funnel_json(std::ostream& out, const std::vector<FunnelStage>& funnel) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : funnel) {
        nlohmann::ordered_json e;
        e["stage"] = s.stage;
        e["excluded"] = s.excluded;
        e["remaining"] = s.remaining;
        arr.push_back(std::move(e));
    }
    out << arr.dump(2) << '\n';
}

std::vector<TurnWindow> anchor_talk_turns(const TimeSeries& series, std::span<const AssessmentRecord> assessments) {
    std::vector<const AssessmentRecord*> recs;
    for (const auto& a : assessments) {
        if (a.patient_id == series.patient_id) recs.push_back(&a);
    }
    std::stable_sort(recs.begin(), recs.end(), [](const AssessmentRecord* a, const AssessmentRecord* b) {
        return a->recorded_week < b->recorded_week;
    });

    std::vector<TurnWindow> out;
    for (std::size_t i = 1; i < recs.size(); ++i) {
        TurnWindow w;
        w.week = recs[i]->week;
        w.previous_day = recs[i - 1]->recorded_week * kDaysPerWeek;
        w.lower_day = (recs[i]->recorded_week - 3.0) * kDaysPerWeek;
        w.upper_day = recs[i]->recorded_week * kDaysPerWeek;
        for (std::size_t k = 0; k < series.size(); ++k) {
            const double t = series.timestamps[k];
            if (t > w.previous_day && t >= w.lower_day && t <= w.upper_day) w.turns.push_back(k);
        }
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace vista::ingest
