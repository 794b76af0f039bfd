#include "support.hpp"
#include "vista/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

using namespace vista;
using namespace vista::stats;

namespace {

// Normal approximation written out directly from pairwise U and tie counts.
double mwu_normal_reference(const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0.0;
    for (double a : x) {
        for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
    std::map<double, double> ties;
    for (double v : x) ties[v] += 1;
    for (double v : y) ties[v] += 1;
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size()), n = nx + ny;
    double tie_term = 0.0;
    for (const auto& [v, t] : ties) tie_term += t * t * t - t;
    const double var = nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) return 1.0;
    const double dev = std::max(0.0, std::abs(u - nx * ny / 2.0) - 0.5);
    return std::erfc(dev / std::sqrt(var) / std::sqrt(2.0));
}

}  // namespace

TEST_CASE("Mann-Whitney worked examples") {
    const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
    const MannWhitneyResult r = mann_whitney_u(a, b);
    CHECK(r.u_x == 0.0);
    CHECK(r.u_y == 9.0);
    CHECK(r.z < 0.0);
    CHECK(r.z == doctest::Approx(-4.0 / std::sqrt(5.25)));
    CHECK(mann_whitney_exact(a, b) == doctest::Approx(0.1).epsilon(1e-12));

    const std::vector<double> c = {1, 2}, d = {3, 4};
    CHECK(mann_whitney_exact(c, d) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const std::vector<double> same = {2, 2, 2};
    const MannWhitneyResult s = mann_whitney_u(same, same);
    CHECK(s.p == 1.0);
    CHECK(s.z == 0.0);
    CHECK(mann_whitney_exact(same, same) == 1.0);
    CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, same), Error);
}

TEST_CASE("Mann-Whitney normal approximation matches a direct computation") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t nx = 1 + rng() % 12, ny = 1 + rng() % 12;
        std::vector<double> x(nx), y(ny);
        for (auto& v : x) v = static_cast<double>(rng() % 5);
        for (auto& v : y) v = static_cast<double>(rng() % 5);
        const MannWhitneyResult r = mann_whitney_u(x, y);
        CHECK(r.u_x + r.u_y == doctest::Approx(static_cast<double>(nx * ny)));
        CHECK(r.p == doctest::Approx(mwu_normal_reference(x, y)).epsilon(1e-12));
        CHECK(r.p >= 0.0);
        CHECK(r.p <= 1.0);
    }
}

TEST_CASE("exact Mann-Whitney matches permutation enumeration") {
    std::mt19937_64 rng(32);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t nx = 1 + rng() % 7, ny = 1 + rng() % 7;
        std::vector<double> x(nx), y(ny);
        const bool tied = rep % 2 == 0;
        for (auto& v : x) v = tied ? static_cast<double>(rng() % 4) : static_cast<double>(rng() % 1000) / 7.0;
        for (auto& v : y) v = tied ? static_cast<double>(rng() % 4) : static_cast<double>(rng() % 1000) / 7.0;
        CHECK(mann_whitney_exact(x, y) == doctest::Approx(vista::test::mwu_exact_by_pairs(x, y)).epsilon(1e-12));
    }
    const std::vector<double> big(9, 1.0);
    CHECK_THROWS_AS(mann_whitney_exact(big, big), Error);
}

TEST_CASE("Bonferroni") {
    const std::vector<double> p = {0.00045, 0.01, 0.2, 1.0};
    const auto adj = bonferroni(p);
    CHECK(adj[0] == doctest::Approx(0.0018));
    CHECK(adj[1] == doctest::Approx(0.04));
    CHECK(adj[2] == doctest::Approx(0.8));
    CHECK(adj[3] == 1.0);
    std::vector<double> sixteen(16, 0.5);
    sixteen[0] = 0.00045;
    CHECK(bonferroni(sixteen)[0] == doctest::Approx(0.0072));
    CHECK_THROWS_AS(bonferroni(std::vector<double>{1.5}), Error);
    CHECK(normal_two_sided_p(0.0) == 1.0);
    CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("logistic regression on a 2x2 table") {
    // Exposed: 40 events, 10 non-events. Unexposed: 20 events, 30 non-events.
    Matrix X(100, 2);
    std::vector<double> y(100);
    for (int i = 0; i < 100; ++i) {
        const bool exposed = i < 50;
        X(i, 0) = 1.0;
        X(i, 1) = exposed ? 1.0 : 0.0;
        y[static_cast<std::size_t>(i)] = exposed ? (i < 40 ? 1.0 : 0.0) : (i < 70 ? 1.0 : 0.0);
    }
    const RegressionResult r = logistic_fit(X, y, {"(Intercept)", "exposed"});
    CHECK(r.converged);
    CHECK_FALSE(r.separated);
    CHECK(r.estimates(1) == doctest::Approx(std::log(6.0)).epsilon(1e-8));
    CHECK(r.odds_ratios(1) == doctest::Approx(6.0).epsilon(1e-8));
    CHECK(r.estimates(0) == doctest::Approx(std::log(20.0 / 30.0)).epsilon(1e-8));
    const double se = std::sqrt(1.0 / 40 + 1.0 / 10 + 1.0 / 20 + 1.0 / 30);
    CHECK(r.std_errors(1) == doctest::Approx(se).epsilon(1e-6));
    CHECK(r.ci_low(1) == doctest::Approx(std::exp(std::log(6.0) - 1.96 * se)).epsilon(1e-6));
    CHECK(r.ci_high(1) == doctest::Approx(std::exp(std::log(6.0) + 1.96 * se)).epsilon(1e-6));
    CHECK(r.n == 100);
    for (std::size_t i = 1; i < r.deviance_trace.size(); ++i) {
        CHECK(r.deviance_trace[i] <= r.deviance_trace[i - 1] + 1e-12);
    }
}

TEST_CASE("logistic regression edge cases") {
    Matrix X(8, 2);
    std::vector<double> y(8);
    for (int i = 0; i < 8; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i % 2;
        y[static_cast<std::size_t>(i)] = (i / 2) % 2;
    }
    const RegressionResult flat = logistic_fit(X, y, {"(Intercept)", "x"});
    CHECK(std::abs(flat.estimates(1)) <= 1e-10);

    for (int i = 0; i < 8; ++i) y[static_cast<std::size_t>(i)] = i % 2;
    const RegressionResult sep = logistic_fit(X, y, {"(Intercept)", "x"});
    CHECK(sep.separated);
    CHECK(std::isnan(sep.ci_low(1)));
    CHECK(std::isnan(sep.ci_high(1)));

    Matrix aliased(8, 3);
    aliased << X, 2.0 * X.col(1);
    try {
        logistic_fit(aliased, y, {"(Intercept)", "x", "twice_x"});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("twice_x") != std::string::npos);
    }
    std::vector<double> one_class(8, 1.0);
    CHECK_THROWS_AS(logistic_fit(X, one_class, {"(Intercept)", "x"}), DataError);
    std::vector<double> not_binary(8, 0.5);
    CHECK_THROWS_AS(logistic_fit(X, not_binary, {"(Intercept)", "x"}), DataError);
}

TEST_CASE("design matrix encoding") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const NumericCovariate age{"score", {1.0, 2.0, nan, 4.0, 5.0}};
    const CategoricalCovariate sex{"gender", {"Female", "Male", "Male", "", "Other"}, "Female"};
    const Design d = build_design(5, {age}, {sex});
    CHECK(d.rows == std::vector<std::size_t>{0, 1, 4});
    CHECK(d.dropped == 2);
    CHECK(d.names == std::vector<std::string>{"(Intercept)", "score", "gender=Male", "gender=Other"});
    CHECK(d.reference_levels == std::vector<std::string>{"gender=Female"});
    CHECK(d.X.col(0).isOnes());
    CHECK(d.X(2, 3) == 1.0);
    CHECK(d.X(0, 2) == 0.0);

    const CategoricalCovariate no_ref{"edu", {"b", "a", "b", "c"}, "missing-level"};
    const Design f = build_design(4, {}, {no_ref});
    CHECK(f.reference_levels == std::vector<std::string>{"edu=b"});
    CHECK(f.names == std::vector<std::string>{"(Intercept)", "edu=a", "edu=c"});
}
