#include "vista/em.hpp"
#include "vista/model_io.hpp"
#include "vista/synthetic.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

using namespace vista;

TEST_CASE("model JSON round trip") {
    const auto cohort = synthetic::sample_cohort(synthetic::well_separated_preset(12, 2), 1);
    FitConfig cfg;
    cfg.max_iters = 3;
    const FittedMixture m = fit(cohort.series, cfg);
    const std::string text = model_to_json(m, std::string("0123456789abcdef"));
    const ModelFile back = model_from_json(text);
    REQUIRE(back.model.num_clusters() == 2);
    CHECK(back.config_hash == "0123456789abcdef");
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(back.model.clusters[l].A == m.clusters[l].A);
        CHECK(back.model.clusters[l].Sigma == m.clusters[l].Sigma);
        CHECK(back.model.clusters[l].mu == m.clusters[l].mu);
    }
    CHECK(back.model.weights == m.weights);
    CHECK(back.model.loglik_trace == m.loglik_trace);
    CHECK(model_to_json(back.model, back.config_hash) == text);

    const auto doc = nlohmann::json::parse(text);
    CHECK(doc["version"] == kModelFormatVersion);
    CHECK(doc["emotion_order"][5] == "sadness");
    CHECK(doc["clusters"][0]["A"].size() == 7);
}

TEST_CASE("malformed model documents") {
    CHECK_THROWS_AS(model_from_json("not json"), DataError);
    CHECK_THROWS_AS(model_from_json("{}"), DataError);

    const auto cohort = synthetic::sample_cohort(synthetic::well_separated_preset(6, 3), 1);
    FitConfig cfg;
    cfg.max_iters = 1;
    auto doc = nlohmann::json::parse(model_to_json(fit(cohort.series, cfg)));
    doc["clusters"][0]["Sigma"] = nlohmann::json::array({nlohmann::json::array({1.0})});
    CHECK_THROWS_AS(model_from_json(doc.dump()), Error);
    CHECK_THROWS_AS(read_model("/nonexistent/model.json"), DataError);
}
