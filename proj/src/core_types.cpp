#include "vista/core_types.hpp"

#include <cmath>
#include <sstream>

namespace vista {

std::size_t emotion_index(std::string_view name) {
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
        if (kEmotionNames[i] == name) return i;
    }
    throw DataError("unknown emotion '" + std::string(name) + "'");
}

TimeSeries TimeSeries::from_emotions(std::string patient_id, std::vector<double> timestamps,
                                     const std::vector<EmotionVector>& emotions) {
    if (timestamps.size() != emotions.size()) {
        throw DimensionError("timestamps and emotion vectors differ in length");
    }
    TimeSeries s;
    s.patient_id = std::move(patient_id);
    s.timestamps = std::move(timestamps);
    s.observations.resize(static_cast<Eigen::Index>(kNumEmotions), static_cast<Eigen::Index>(emotions.size()));
    for (std::size_t k = 0; k < emotions.size(); ++k) {
        s.observations.col(static_cast<Eigen::Index>(k)) = emotions[k].to_eigen();
    }
    return s;
}

ValidationReport validate_series(const TimeSeries& series, const ValidationOptions& options) {
    ValidationReport report;
    const auto steps = static_cast<Eigen::Index>(series.timestamps.size());

    if (steps == 0) report.violations.emplace_back("empty series");
    if (series.observations.cols() != steps) {
        report.violations.emplace_back("observation count " + std::to_string(series.observations.cols()) +
                                       " != timestamp count " + std::to_string(steps));
    }
    if (options.expected_dim > 0 && series.observations.rows() != options.expected_dim) {
        report.violations.emplace_back("dimension " + std::to_string(series.observations.rows()) +
                                       " != " + std::to_string(options.expected_dim));
    }
    for (std::size_t k = 0; k < series.timestamps.size(); ++k) {
        if (!std::isfinite(series.timestamps[k])) {
            report.violations.emplace_back("non-finite timestamp at step " + std::to_string(k));
        } else if (k > 0 && !(series.timestamps[k] > series.timestamps[k - 1])) {
            report.violations.emplace_back("non-increasing timestamps at step " + std::to_string(k));
        }
    }

    const Eigen::Index cols = std::min(steps, series.observations.cols());
    for (Eigen::Index k = 0; k < cols; ++k) {
        const auto obs = series.observations.col(k);
        bool flagged = false;
        for (Eigen::Index j = 0; j < obs.size() && !flagged; ++j) {
            const double v = obs[j];
            if (!std::isfinite(v)) {
                report.violations.emplace_back("non-finite element at step " + std::to_string(k));
                flagged = true;
            } else if (options.unit_interval && (v < 0.0 || v > 1.0)) {
                report.violations.emplace_back("element out of [0,1] at step " + std::to_string(k));
                flagged = true;
            }
        }
        if (!flagged && options.unit_interval && std::abs(obs.sum() - 1.0) > options.sum_warning_tolerance) {
            std::ostringstream msg;
            msg << "emotion sum " << obs.sum() << " deviates from 1 at step " << k;
            report.warnings.push_back(msg.str());
        }
    }
    return report;
}

void check_dimensions(const ClusterParameters& p) {
    const Eigen::Index dx = p.mu.size();
    const Eigen::Index dy = p.C.rows();
    auto need = [](bool ok, const char* what) {
        if (!ok) throw DimensionError(std::string("parameter shape mismatch: ") + what);
    };
    need(dx > 0 && dy > 0, "empty latent or observation dimension");
    need(p.A.rows() == dx && p.A.cols() == dx, "A must be d_x x d_x");
    need(p.C.cols() == dx, "C must be d_y x d_x");
    need(p.P.rows() == dx && p.P.cols() == dx, "P must be d_x x d_x");
    need(p.Gamma.rows() == dx && p.Gamma.cols() == dx, "Gamma must be d_x x d_x");
    need(p.Sigma.rows() == dy && p.Sigma.cols() == dy, "Sigma must be d_y x d_y");
}

std::vector<std::string> validate_parameters(const ClusterParameters& params) {
    std::vector<std::string> out;
    try {
        check_dimensions(params);
    } catch (const DimensionError& e) {
        out.emplace_back(e.what());
        return out;
    }
    auto check_cov = [&](const Matrix& m, const char* name) {
        if (!m.allFinite()) {
            out.push_back(std::string(name) + " has non-finite entries");
            return;
        }
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
            out.push_back(std::string(name) + " is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10) {
            out.push_back(std::string(name) + " is not positive semidefinite");
        }
    };
    check_cov(params.P, "P");
    check_cov(params.Sigma, "Sigma");
    check_cov(params.Gamma, "Gamma");
    if (!params.A.allFinite() || !params.C.allFinite() || !params.mu.allFinite()) {
        out.emplace_back("mu, A or C has non-finite entries");
    }
    return out;
}

void AssessmentRecord::compute_totals() {
    phq9_total = 0;
    gad7_total = 0;
    for (std::size_t i = 0; i < kPhq9Items; ++i) {
        if (phq9_items[i] < 0 || phq9_items[i] > 3) {
            throw DataError("phq" + std::to_string(i + 1) + " = " + std::to_string(phq9_items[i]) + " outside [0,3]");
        }
        phq9_total += phq9_items[i];
    }
    for (std::size_t i = 0; i < kGad7Items; ++i) {
        if (gad7_items[i] < 0 || gad7_items[i] > 3) {
            throw DataError("gad" + std::to_string(i + 1) + " = " + std::to_string(gad7_items[i]) + " outside [0,3]");
        }
        gad7_total += gad7_items[i];
    }
}

int bin_week(double recorded_week) {
    int best = kScheduledWeeks[0];
    double best_dist = std::abs(recorded_week - best);
    for (int w : kScheduledWeeks) {
        const double d = std::abs(recorded_week - w);
        // Strict comparison keeps the lower week on ties.
        if (d < best_dist) {
            best = w;
            best_dist = d;
        }
    }
    return best;
}

}  // namespace vista
