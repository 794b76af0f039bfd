#include "vista/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace vista {

namespace {

using ojson = nlohmann::ordered_json;

ojson matrix_json(const Matrix& m) {
    ojson rows = ojson::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ojson row = ojson::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

ojson vector_json(const Vector& v) {
    ojson out = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

const ojson& field(const ojson& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) throw DataError(std::string("model JSON is missing '") + key + "'");
    return obj[key];
}

Matrix matrix_from(const ojson& j, const char* what, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
        throw DimensionError(std::string("model field '") + what + "' has the wrong number of rows");
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const ojson& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw DimensionError(std::string("model field '") + what + "' has the wrong number of columns");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const ojson& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw DataError(std::string("model field '") + what + "' has a non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

Vector vector_from(const ojson& j, const char* what, Eigen::Index n) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
        throw DimensionError(std::string("model field '") + what + "' has the wrong length");
    }
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number()) throw DataError(std::string("non-numeric entry in ") + what);
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

}  // namespace

std::string model_to_json(const FittedMixture& model, const std::optional<std::string>& config_hash) {
    if (model.clusters.empty()) throw Error("model has no clusters");
    const Eigen::Index dx = model.clusters.front().latent_dim();
    const Eigen::Index dy = model.clusters.front().obs_dim();

    ojson doc;
    doc["version"] = kModelFormatVersion;
    doc["M"] = model.clusters.size();
    doc["d_x"] = dx;
    doc["d_y"] = dy;
    ojson order = ojson::array();
    if (dy == static_cast<Eigen::Index>(kNumEmotions)) {
        for (auto name : kEmotionNames) order.push_back(std::string(name));
    }
    doc["emotion_order"] = std::move(order);
    doc["weights"] = model.weights;
    ojson clusters = ojson::array();
    for (const auto& c : model.clusters) {
        ojson cj;
        cj["mu"] = vector_json(c.mu);
        cj["A"] = matrix_json(c.A);
        cj["C"] = matrix_json(c.C);
        cj["P"] = matrix_json(c.P);
        cj["Sigma"] = matrix_json(c.Sigma);
        cj["Gamma"] = matrix_json(c.Gamma);
        clusters.push_back(std::move(cj));
    }
    doc["clusters"] = std::move(clusters);
    ojson fit;
    fit["iters"] = model.iterations;
    fit["converged"] = model.converged;
    fit["loglik_trace"] = model.loglik_trace;
    std::vector<bool> frozen = model.frozen;
    frozen.resize(model.clusters.size(), false);
    fit["frozen"] = frozen;
    fit["warnings"] = model.warnings;
    doc["fit"] = std::move(fit);
    if (config_hash) doc["config_hash"] = *config_hash;
    return doc.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        throw DataError(std::string("model JSON is malformed: ") + e.what());
    }
    try {
        const int version = field(doc, "version").get<int>();
        if (version != kModelFormatVersion) throw DataError("unsupported model version " + std::to_string(version));
        const auto M = field(doc, "M").get<std::size_t>();
        const auto dx = field(doc, "d_x").get<Eigen::Index>();
        const auto dy = field(doc, "d_y").get<Eigen::Index>();
        if (M == 0 || dx < 1 || dy < 1) throw DataError("model shape must be positive");
        const ojson& order = field(doc, "emotion_order");
        if (!order.empty()) {
            if (order.size() != kNumEmotions) throw DataError("emotion_order must list 7 emotions");
            for (std::size_t i = 0; i < kNumEmotions; ++i) {
                if (order[i].get<std::string>() != kEmotionNames[i]) {
                    throw DataError("emotion_order differs from the canonical order");
                }
            }
        }

        ModelFile out;
        FittedMixture& m = out.model;
        m.weights = field(doc, "weights").get<std::vector<double>>();
        if (m.weights.size() != M) throw DimensionError("weights length does not match M");
        const ojson& clusters = field(doc, "clusters");
        if (!clusters.is_array() || clusters.size() != M) throw DimensionError("clusters length does not match M");
        for (const auto& cj : clusters) {
            ClusterParameters c;
            c.mu = vector_from(field(cj, "mu"), "mu", dx);
            c.A = matrix_from(field(cj, "A"), "A", dx, dx);
            c.C = matrix_from(field(cj, "C"), "C", dy, dx);
            c.P = matrix_from(field(cj, "P"), "P", dx, dx);
            c.Sigma = matrix_from(field(cj, "Sigma"), "Sigma", dy, dy);
            c.Gamma = matrix_from(field(cj, "Gamma"), "Gamma", dx, dx);
            m.clusters.push_back(std::move(c));
        }
        m.frozen.assign(M, false);
        if (doc.contains("fit")) {
            const ojson& fit = doc["fit"];
            if (fit.contains("iters")) m.iterations = fit["iters"].get<int>();
            if (fit.contains("converged")) m.converged = fit["converged"].get<bool>();
            if (fit.contains("loglik_trace")) m.loglik_trace = fit["loglik_trace"].get<std::vector<double>>();
            if (fit.contains("frozen")) {
                m.frozen = fit["frozen"].get<std::vector<bool>>();
                m.frozen.resize(M, false);
            }
            if (fit.contains("warnings")) m.warnings = fit["warnings"].get<std::vector<std::string>>();
        }
        if (doc.contains("config_hash")) out.config_hash = doc["config_hash"].get<std::string>();
        return out;
    } catch (const ojson::exception& e) {
        throw DataError(std::string("model JSON has an unexpected type: ") + e.what());
    }
}

void write_model(const std::filesystem::path& path, const FittedMixture& model,
                 const std::optional<std::string>& config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << model_to_json(model, config_hash);
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

ModelFile read_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace vista
