#include "vista/em.hpp"
#include "vista/lgssm.hpp"
#include "vista/model_io.hpp"
#include "vista/network.hpp"
#include "vista/outcomes.hpp"
#include "vista/pipeline.hpp"
#include "vista/stats.hpp"
#include "vista/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace vista;

namespace {

synthetic::CohortSpec preset_spec(const std::string& preset, std::size_t n, std::uint64_t seed) {
    if (preset == "paper-shaped") return synthetic::paper_shaped_preset(n, seed);
    if (preset == "well-separated") return synthetic::well_separated_preset(n, seed);
    throw UsageError("unknown preset '" + preset + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Mixture-of-LGSSM clustering of irregular multivariate time series";
    m.attr("__version__") = version();
    m.attr("EMOTIONS") = std::vector<std::string>(kEmotionNames.begin(), kEmotionNames.end());

    auto base = py::register_exception<Error>(m, "VistaError", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<InferenceError>(m, "InferenceError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());

    py::class_<TimeSeries>(m, "TimeSeries")
        .def(py::init([](std::string id, std::vector<double> ts, Matrix obs) {
                 return TimeSeries{std::move(id), std::move(ts), std::move(obs)};
             }),
             py::arg("patient_id"), py::arg("timestamps"), py::arg("observations"),
             "observations has shape (dim, steps)")
        .def_readwrite("patient_id", &TimeSeries::patient_id)
        .def_readwrite("timestamps", &TimeSeries::timestamps)
        .def_readwrite("observations", &TimeSeries::observations)
        .def("__len__", &TimeSeries::size)
        .def("validate", [](const TimeSeries& s) { return validate_series(s).violations; });

    py::class_<ClusterParameters>(m, "ClusterParameters")
        .def(py::init([](Vector mu, Matrix A, Matrix C, Matrix P, Matrix Sigma, Matrix Gamma) {
                 ClusterParameters p{std::move(mu), std::move(A), std::move(C), std::move(P), std::move(Sigma),
                                     std::move(Gamma)};
                 check_dimensions(p);
                 return p;
             }),
             py::arg("mu"), py::arg("A"), py::arg("C"), py::arg("P"), py::arg("Sigma"), py::arg("Gamma"))
        .def_readwrite("mu", &ClusterParameters::mu)
        .def_readwrite("A", &ClusterParameters::A)
        .def_readwrite("C", &ClusterParameters::C)
        .def_readwrite("P", &ClusterParameters::P)
        .def_readwrite("Sigma", &ClusterParameters::Sigma)
        .def_readwrite("Gamma", &ClusterParameters::Gamma);

    py::enum_<InitStrategy>(m, "InitStrategy")
        .value("KMeans", InitStrategy::KMeans)
        .value("Perturbed", InitStrategy::Perturbed);

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("clusters", &FitConfig::clusters)
        .def_readwrite("latent_dim", &FitConfig::latent_dim)
        .def_readwrite("max_iters", &FitConfig::max_iters)
        .def_readwrite("tol", &FitConfig::tol)
        .def_readwrite("seed", &FitConfig::seed)
        .def_readwrite("min_weight", &FitConfig::min_weight)
        .def_readwrite("init", &FitConfig::init)
        .def_readwrite("perturbation", &FitConfig::perturbation)
        .def_readwrite("threads", &FitConfig::threads);

    py::class_<FittedMixture>(m, "FittedMixture")
        .def_readonly("clusters", &FittedMixture::clusters)
        .def_readonly("weights", &FittedMixture::weights)
        .def_readonly("responsibilities", &FittedMixture::responsibilities)
        .def_readonly("labels", &FittedMixture::labels)
        .def_readonly("loglik_trace", &FittedMixture::loglik_trace)
        .def_readonly("iterations", &FittedMixture::iterations)
        .def_readonly("converged", &FittedMixture::converged)
        .def_readonly("warnings", &FittedMixture::warnings)
        .def("to_json", [](const FittedMixture& f) { return model_to_json(f); })
        .def_static("from_json", [](const std::string& text) { return model_from_json(text).model; });

    py::class_<FilterResult>(m, "FilterResult")
        .def_readonly("log_likelihood", &FilterResult::log_likelihood)
        .def_readonly("filtered_means", &FilterResult::filtered_means)
        .def_readonly("filtered_covs", &FilterResult::filtered_covs);
    py::class_<SmootherResult>(m, "SmootherResult")
        .def_readonly("smoothed_means", &SmootherResult::smoothed_means)
        .def_readonly("smoothed_covs", &SmootherResult::smoothed_covs)
        .def_readonly("lag_one_crosscovs", &SmootherResult::lag_one_crosscovs);

    m.def("kalman_filter", &kalman_filter, py::arg("series"), py::arg("params"));
    m.def("rts_smoother", &rts_smoother, py::arg("series"), py::arg("params"), py::arg("filter"));
    m.def("log_likelihood", [](const TimeSeries& s, const ClusterParameters& p) { return kalman_filter(s, p).log_likelihood; },
          py::arg("series"), py::arg("params"));

    m.def(
        "fit",
        [](const std::vector<TimeSeries>& data, const FitConfig& config) {
            py::gil_scoped_release release;
            return fit(data, config);
        },
        py::arg("data"), py::arg("config"));
    m.def(
        "assign",
        [](const std::vector<TimeSeries>& data, const FittedMixture& model, std::size_t threads) {
            Assignment a;
            {
                py::gil_scoped_release release;
                a = assign(data, model, threads);
            }
            return py::make_tuple(a.labels, a.responsibilities, a.total_log_likelihood);
        },
        py::arg("data"), py::arg("model"), py::arg("threads") = 0,
        "Returns (labels, responsibilities, total log-likelihood)");
    m.def("adjusted_rand_index",
          [](const std::vector<int>& a, const std::vector<int>& b) { return adjusted_rand_index(a, b); });

    m.def(
        "simulate_cohort",
        [](const std::string& preset, std::size_t n, std::uint64_t seed, std::optional<bool> clip) {
            synthetic::CohortSpec spec = preset_spec(preset, n, seed);
            if (clip) spec.clip = *clip;
            synthetic::Cohort c = synthetic::sample_cohort(spec);
            return py::make_tuple(c.series, c.labels, spec.clusters);
        },
        py::arg("preset"), py::arg("n"), py::arg("seed"), py::arg("clip") = py::none(),
        "Returns (series, labels, true cluster parameters)");

    m.def("pseudoinverse", &pseudoinverse);
    m.def("transition_matrix", &transition_matrix, py::arg("params"), py::arg("delta"));
    m.def(
        "network_for_cluster", [](const ClusterParameters& p, double weeks) { return network_for_cluster(p, weeks).weights; },
        py::arg("params"), py::arg("delta_weeks") = 1.0);
    m.def(
        "out_expected_influence", [](const Matrix& W) { return out_expected_influence(build_network(W, 1.0)); },
        py::arg("weights"));
    m.def("centrality_ranks", [](const std::vector<Vector>& scores) { return centrality_ranking(scores).rank; });

    m.def(
        "mann_whitney_u",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const auto r = stats::mann_whitney_u(x, y);
            py::dict d;
            d["u_x"] = r.u_x;
            d["u_y"] = r.u_y;
            d["z"] = r.z;
            d["p"] = r.p;
            return d;
        },
        py::arg("x"), py::arg("y"));
    m.def("mann_whitney_exact", [](const std::vector<double>& x, const std::vector<double>& y) {
        return stats::mann_whitney_exact(x, y);
    });
    m.def("bonferroni", [](const std::vector<double>& p) { return stats::bonferroni(p); });
    m.def(
        "logistic_fit",
        [](const Matrix& X, const std::vector<double>& y, const std::vector<std::string>& names) {
            const auto r = stats::logistic_fit(X, y, names);
            py::dict d;
            d["names"] = r.names;
            d["estimates"] = r.estimates;
            d["std_errors"] = r.std_errors;
            d["odds_ratios"] = r.odds_ratios;
            d["ci_low"] = r.ci_low;
            d["ci_high"] = r.ci_high;
            d["p_values"] = r.p_values;
            d["converged"] = r.converged;
            d["separated"] = r.separated;
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("names"));

    m.def(
        "run_command",
        [](const std::string& command, const std::string& config_json) {
            const PipelineConfig cfg = PipelineConfig::from_json_text(config_json);
            std::ostringstream log;
            py::gil_scoped_release release;
            if (command == "simulate") cmd_simulate(cfg, log);
            else if (command == "ingest") cmd_ingest(cfg, log);
            else if (command == "fit") cmd_fit(cfg, log);
            else if (command == "assign") cmd_assign(cfg, log);
            else if (command == "network") cmd_network(cfg, log);
            else if (command == "outcomes") cmd_outcomes(cfg, log);
            else if (command == "pipeline") cmd_pipeline(cfg, log);
            else throw UsageError("unknown command '" + command + "'");
            return log.str();
        },
        py::arg("command"), py::arg("config_json"), "Runs a command-line subcommand; returns its log");
}
