#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ctxmat/dynamics.hpp"
#include "ctxmat/features.hpp"
#include "ctxmat/inference.hpp"
#include "ctxmat/metrics.hpp"
#include "ctxmat/pipeline/ingest.hpp"
#include "ctxmat/pipeline/io.hpp"
#include "ctxmat/pipeline/study.hpp"
#include "ctxmat/selection.hpp"

namespace py = pybind11;
using namespace ctxmat;

PYBIND11_MODULE(_ctxmat, m) {
    m.doc() = "context-matrix inference: dyadic influence estimation via particle filtering";

    py::register_exception<Error>(m, "CtxmatError", PyExc_RuntimeError);

    // ---- core -------------------------------------------------------------
    py::class_<DynamicsParams>(m, "DynamicsParams")
        .def(py::init<>())
        .def(py::init([](double influence_scale, double decay) {
                 return DynamicsParams{influence_scale, decay};
             }),
             py::arg("influence_scale") = 0.5, py::arg("decay") = 0.1)
        .def_readwrite("influence_scale", &DynamicsParams::influence_scale)
        .def_readwrite("decay", &DynamicsParams::decay);

    py::class_<BehaviorSeries>(m, "BehaviorSeries")
        .def(py::init<>())
        .def_readwrite("frames", &BehaviorSeries::frames)
        .def_readwrite("agent_labels", &BehaviorSeries::agent_labels)
        .def_readwrite("channel_labels", &BehaviorSeries::channel_labels)
        .def_readwrite("trial_starts", &BehaviorSeries::trial_starts)
        .def("__len__", &BehaviorSeries::length)
        .def("agents", &BehaviorSeries::agents)
        .def("channels", &BehaviorSeries::channels);

    m.def("matrix_error", &matrix_error, py::arg("a"), py::arg("b"),
          "Mean absolute entrywise difference of two matrices.");
    m.def("quartile_bounds", &quartile_bounds, py::arg("length"),
          "Four half-open index ranges partitioning 0..length-1.");
    m.def(
        "aggregate_matrices",
        [](const std::vector<ContextMatrix>& series, const std::string& agg) {
            if (agg == "trial_mean") return aggregate_matrices(series, AggregationSpec::trial_mean());
            if (agg == "final") return aggregate_matrices(series, AggregationSpec::final());
            if (agg.size() == 2 && agg[0] == 'q')
                return aggregate_matrices(series, AggregationSpec::quartile_mean(agg[1] - '0'));
            throw ConfigError("unknown aggregation: " + agg);
        },
        py::arg("series"), py::arg("aggregation"),
        "Collapse a matrix series; aggregation is q1..q4, trial_mean or final.");

    // ---- dynamics ----------------------------------------------------------
    m.def("predict_step", &predict_step, py::arg("matrix"), py::arg("b_prev"), py::arg("params"));
    m.def(
        "simulate",
        [](const ContextMatrix& matrix, double noise, std::size_t length,
           const DynamicsParams& params, std::uint64_t seed) {
            GroundTruthSpec spec;
            spec.matrix = matrix;
            spec.noise = {noise, seed};
            spec.length = length;
            spec.params = params;
            spec.init_seed = seed + 1;
            return simulate(spec);
        },
        py::arg("matrix"), py::arg("noise") = 0.05, py::arg("length") = 500,
        py::arg("params") = DynamicsParams{}, py::arg("seed") = 0,
        "Generate a synthetic dyadic series from a fixed influence matrix.");
    m.def("sign_pattern_matrix", &sign_pattern_matrix, py::arg("index"));

    // ---- inference ----------------------------------------------------------
    py::class_<FilterConfig>(m, "FilterConfig")
        .def(py::init<>())
        .def_readwrite("particles", &FilterConfig::particles)
        .def_readwrite("jitter_std", &FilterConfig::jitter_std)
        .def_readwrite("params", &FilterConfig::params)
        .def_readwrite("sigma_b", &FilterConfig::sigma_b)
        .def_readwrite("seed", &FilterConfig::seed);

    py::class_<InferenceRun>(m, "InferenceRun")
        .def_readonly("jitter_std", &InferenceRun::jitter_std)
        .def_readonly("map_series", &InferenceRun::map_series)
        .def_readonly("predicted", &InferenceRun::predicted)
        .def_readonly("ess", &InferenceRun::ess)
        .def_readonly("underflow_steps", &InferenceRun::underflow_steps);

    m.def("run_filter", &run_filter, py::arg("series"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>(),
          "Particle filter over a behavior series; returns MAP matrices and predictions.");
    m.def("grid_search", &grid_search, py::arg("series"), py::arg("config"), py::arg("stds"),
          py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
    m.def("default_std_grid", &default_std_grid);
    m.def("behavior_variances", &behavior_variances, py::arg("series"));
    m.def("log_likelihood", &log_likelihood, py::arg("matrix"), py::arg("b_prev"),
          py::arg("b_obs"), py::arg("sigma_b"), py::arg("params"));

    // ---- metrics ----------------------------------------------------------
    py::class_<CrqaConfig>(m, "CrqaConfig")
        .def(py::init<>())
        .def_readwrite("embed_dim", &CrqaConfig::embed_dim)
        .def_readwrite("delay", &CrqaConfig::delay)
        .def_readwrite("radius", &CrqaConfig::radius)
        .def_readwrite("l_min", &CrqaConfig::l_min);

    py::class_<CrqaMetrics>(m, "CrqaMetrics")
        .def_readonly("rr", &CrqaMetrics::rr)
        .def_readonly("det", &CrqaMetrics::det)
        .def_readonly("ent", &CrqaMetrics::ent)
        .def_readonly("maxl", &CrqaMetrics::maxl);

    py::class_<GcResult>(m, "GcResult")
        .def_readonly("gc_1to2", &GcResult::gc_1to2)
        .def_readonly("gc_2to1", &GcResult::gc_2to1)
        .def_readonly("lag", &GcResult::lag)
        .def_readonly("used_first_differences", &GcResult::used_first_differences);

    m.def("crqa", &crqa, py::arg("x"), py::arg("y"), py::arg("config") = CrqaConfig{});
    m.def("granger", &granger, py::arg("x"), py::arg("y"));
    m.def("gc_strength", &gc_strength, py::arg("channels"));
    m.def("zscore", &zscore, py::arg("x"));
    m.def(
        "standalone_metric",
        [](const Series& x, const std::string& name, std::optional<Series> aux) {
            return standalone_metric(x, name, aux ? &*aux : nullptr);
        },
        py::arg("x"), py::arg("name"), py::arg("aux") = std::nullopt);
    m.def("paired_metric", &paired_metric, py::arg("pred"), py::arg("obs"), py::arg("name"),
          py::arg("crqa_config") = CrqaConfig{});
    m.def("standalone_metric_names", [] { return standalone_metric_names(); });
    m.def("paired_metric_names", [] { return paired_metric_names(); });

    // ---- selection ----------------------------------------------------------
    py::class_<SelectionOutcome>(m, "SelectionOutcome")
        .def_readonly("chosen_index", &SelectionOutcome::chosen_index)
        .def_readonly("chosen_std", &SelectionOutcome::chosen_std)
        .def_readonly("score_table", &SelectionOutcome::score_table);

    m.def(
        "select",
        [](const std::vector<InferenceRun>& runs, const BehaviorSeries& observed,
           const std::string& style, const std::string& metric, const std::string& direction,
           std::optional<ContextMatrix> truth) {
            SelectionScheme scheme;
            if (style == "ideal_oracle")
                scheme.style = SelectionStyle::IdealOracle;
            else if (style == "lowest_sigma")
                scheme.style = SelectionStyle::LowestSigma;
            else if (style == "between_subjects")
                scheme.style = SelectionStyle::BetweenSubjects;
            else if (style == "within_subjects")
                scheme.style = SelectionStyle::WithinSubjects;
            else if (style == "standalone")
                scheme.style = SelectionStyle::Standalone;
            else
                throw ConfigError("unknown selection style: " + style);
            scheme.metric = metric;
            if (direction == "maximize")
                scheme.direction = Direction::Maximize;
            else if (direction == "minimize")
                scheme.direction = Direction::Minimize;
            else if (scheme.style == SelectionStyle::WithinSubjects)
                scheme.direction = default_within_direction(metric);
            return select(runs, observed, scheme, truth);
        },
        py::arg("runs"), py::arg("observed"), py::arg("style"), py::arg("metric") = "",
        py::arg("direction") = "default", py::arg("truth") = std::nullopt,
        "Pick one grid-search run by the named selection style.");

    // ---- features ----------------------------------------------------------
    m.def("relative_influence", &relative_influence, py::arg("matrix"));
    m.def("leader_strength", &leader_strength, py::arg("matrix"));
    m.def("leader_sign", &leader_sign, py::arg("matrix"));
    m.def("leader_switch_rate", &leader_switch_rate, py::arg("series"), py::arg("range"));

    py::class_<BlockSummary>(m, "BlockSummary")
        .def_readonly("value", &BlockSummary::value)
        .def_readonly("undefined", &BlockSummary::undefined);

    py::class_<FeatureSummary>(m, "FeatureSummary")
        .def_property_readonly("relative_influence_quartile",
                               [](const FeatureSummary& s) {
                                   return std::vector<BlockSummary>(
                                       s.relative_influence_quartile,
                                       s.relative_influence_quartile + 4);
                               })
        .def_readonly("relative_influence_trial", &FeatureSummary::relative_influence_trial)
        .def_readonly("relative_influence_final", &FeatureSummary::relative_influence_final)
        .def_property_readonly("leader_strength_quartile",
                               [](const FeatureSummary& s) {
                                   return std::vector<BlockSummary>(s.leader_strength_quartile,
                                                                    s.leader_strength_quartile + 4);
                               })
        .def_readonly("leader_strength_trial", &FeatureSummary::leader_strength_trial)
        .def_readonly("leader_strength_final", &FeatureSummary::leader_strength_final)
        .def_property_readonly("switch_rate_quartile",
                               [](const FeatureSummary& s) {
                                   return std::vector<std::optional<double>>(
                                       s.switch_rate_quartile, s.switch_rate_quartile + 4);
                               })
        .def_readonly("switch_rate_trial", &FeatureSummary::switch_rate_trial);

    m.def("summarize", &summarize, py::arg("series"));

    // ---- io -----------------------------------------------------------------
    m.def("read_series_csv", &io::read_series_csv, py::arg("path"));
    m.def("write_series_csv", &io::write_series_csv, py::arg("path"), py::arg("series"));
}
