#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctxmat/dynamics.hpp"
#include "ctxmat/selection.hpp"

using namespace ctxmat;

namespace {

ContextMatrix mat2(double a, double b, double c, double d) {
    ContextMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

BehaviorSeries make_series(const ContextMatrix& C, std::size_t T, double noise,
                           std::uint64_t seed) {
    GroundTruthSpec spec;
    spec.matrix = C;
    spec.noise = {noise, seed};
    spec.length = T;
    spec.params = {0.5, 0.1};
    spec.init_seed = seed + 1;
    return simulate(spec);
}

/// A run whose predicted series is exactly the observed series; its MAP
/// series is a repeated constant matrix.
InferenceRun perfect_run(const BehaviorSeries& obs, const ContextMatrix& map_value, double std) {
    InferenceRun run;
    run.jitter_std = std;
    run.predicted = obs;
    run.map_series.assign(obs.length() - 1, map_value);
    return run;
}

BehaviorSeries relabeled(const BehaviorSeries& s) {
    BehaviorSeries out = s;
    out.agent_labels = {s.agent_labels[1], s.agent_labels[0]};
    for (auto& f : out.frames) f = f.colwise().reverse().eval();  // flips row order
    return out;
}

}  // namespace

TEST_CASE("score_between_subjects is zero when predicted equals observed") {
    const auto obs = make_series(mat2(1, 0, 0, 1), 80, 0.1, 4);
    const auto run = perfect_run(obs, mat2(1, 0, 0, 1), 0.01);
    for (const char* metric : {"correlation", "crqa_rr", "crqa_det", "crqa_ent", "crqa_maxl"})
        CHECK(score_between_subjects(run, obs, metric) == doctest::Approx(0.0));
}

TEST_CASE("score_between_subjects is symmetric under simultaneous agent relabeling") {
    const auto obs = make_series(mat2(1, -1, 0, 1), 70, 0.1, 9);
    const auto pred_src = make_series(mat2(0, 1, 1, 0), 70, 0.1, 10);
    InferenceRun run = perfect_run(obs, mat2(0, 0, 0, 0), 0.01);
    run.predicted = pred_src;

    InferenceRun run_swapped = run;
    run_swapped.predicted = relabeled(pred_src);
    const auto obs_swapped = relabeled(obs);

    for (const char* metric : {"correlation", "crqa_maxl"}) {
        const double a = score_between_subjects(run, obs, metric);
        const double b = score_between_subjects(run_swapped, obs_swapped, metric);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("score_within_subjects trivial identities") {
    const auto obs = make_series(mat2(1, 0, 0, 1), 60, 0.1, 12);
    const auto run = perfect_run(obs, mat2(1, 0, 0, 1), 0.01);
    CHECK(score_within_subjects(run, obs, "correlation") == doctest::Approx(1.0));
    CHECK(score_within_subjects(run, obs, "mse") == doctest::Approx(0.0));
    CHECK(score_within_subjects(run, obs, "r2") == doctest::Approx(1.0));
}

TEST_CASE("score_standalone") {
    const auto obs = make_series(mat2(1, 0, 0, 1), 60, 0.1, 15);
    InferenceRun run = perfect_run(obs, mat2(0, 0, 0, 0), 0.01);
    // constant predicted series has zero variance
    for (auto& f : run.predicted.frames) f.setConstant(0.3);
    CHECK(score_standalone(run, obs, "variance") == doctest::Approx(0.0));
}

TEST_CASE("default within-subjects directions") {
    CHECK(default_within_direction("correlation") == Direction::Maximize);
    CHECK(default_within_direction("r2") == Direction::Maximize);
    CHECK(default_within_direction("norm_sum_derivative_error") == Direction::Maximize);
    CHECK(default_within_direction("crqa_rr") == Direction::Maximize);
    CHECK(default_within_direction("crqa_det") == Direction::Maximize);
    CHECK(default_within_direction("crqa_ent") == Direction::Maximize);
    CHECK(default_within_direction("crqa_maxl") == Direction::Maximize);
    CHECK(default_within_direction("mse") == Direction::Minimize);
    CHECK(default_within_direction("variance_difference") == Direction::Minimize);
}

TEST_CASE("select") {
    const auto truth = mat2(1, 0, 0, 1);
    const auto obs = make_series(truth, 80, 0.05, 20);

    SUBCASE("single run is chosen regardless of scheme") {
        std::vector<InferenceRun> runs{perfect_run(obs, truth, 0.05)};
        SelectionScheme scheme;
        scheme.style = SelectionStyle::LowestSigma;
        const auto out = select(runs, obs, scheme);
        CHECK(out.chosen_index == 0);
        CHECK(out.chosen_std == doctest::Approx(0.05));
    }
    SUBCASE("lowest_sigma picks the smallest std") {
        std::vector<InferenceRun> runs{perfect_run(obs, truth, 0.021),
                                       perfect_run(obs, truth, 0.001),
                                       perfect_run(obs, truth, 0.101)};
        SelectionScheme scheme;
        scheme.style = SelectionStyle::LowestSigma;
        const auto out = select(runs, obs, scheme);
        CHECK(out.chosen_index == 1);
        CHECK(out.chosen_std == doctest::Approx(0.001));
    }
    SUBCASE("ideal_oracle minimizes the aggregated matrix error") {
        std::vector<InferenceRun> runs{perfect_run(obs, mat2(0, 0, 0, 0), 0.001),
                                       perfect_run(obs, truth, 0.011),
                                       perfect_run(obs, mat2(1, 1, 1, 1), 0.021)};
        SelectionScheme scheme;
        scheme.style = SelectionStyle::IdealOracle;
        const auto out = select(runs, obs, scheme, truth);
        CHECK(out.chosen_index == 1);
    }
    SUBCASE("oracle without truth is a config error") {
        std::vector<InferenceRun> runs{perfect_run(obs, truth, 0.001)};
        SelectionScheme scheme;
        scheme.style = SelectionStyle::IdealOracle;
        CHECK_THROWS_AS(select(runs, obs, scheme), ConfigError);
    }
    SUBCASE("within-subjects correlation prefers the matching predicted series") {
        InferenceRun good = perfect_run(obs, truth, 0.051);
        InferenceRun bad = perfect_run(obs, truth, 0.001);
        for (auto& f : bad.predicted.frames) f = -f;  // anti-correlated
        SelectionScheme scheme;
        scheme.style = SelectionStyle::WithinSubjects;
        scheme.metric = "correlation";
        scheme.direction = Direction::Maximize;
        const auto out = select({bad, good}, obs, scheme);
        CHECK(out.chosen_index == 1);
        CHECK(out.score_table.size() == 2);
        CHECK(out.score_table[1] == doctest::Approx(1.0));
    }
    SUBCASE("ties break to the lower std") {
        std::vector<InferenceRun> runs{perfect_run(obs, truth, 0.031),
                                       perfect_run(obs, truth, 0.001)};
        SelectionScheme scheme;
        scheme.style = SelectionStyle::WithinSubjects;
        scheme.metric = "mse";
        scheme.direction = Direction::Minimize;
        const auto out = select(runs, obs, scheme);  // both score exactly 0
        CHECK(out.chosen_index == 1);
    }
    SUBCASE("empty run list") {
        SelectionScheme scheme;
        CHECK_THROWS_AS(select({}, obs, scheme), EmptyInputError);
    }
    SUBCASE("determinism") {
        std::vector<InferenceRun> runs{perfect_run(obs, truth, 0.011),
                                       perfect_run(obs, mat2(0, 1, 1, 0), 0.021)};
        SelectionScheme scheme;
        scheme.style = SelectionStyle::BetweenSubjects;
        scheme.metric = "crqa_maxl";
        const auto a = select(runs, obs, scheme);
        const auto b = select(runs, obs, scheme);
        CHECK(a.chosen_index == b.chosen_index);
        for (std::size_t i = 0; i < a.score_table.size(); ++i) {
            if (std::isnan(a.score_table[i]))
                CHECK(std::isnan(b.score_table[i]));
            else
                CHECK(a.score_table[i] == b.score_table[i]);
        }
    }
}

TEST_CASE("every metric identifier is reachable from a selection scheme") {
    const auto truth = mat2(1, 0, 0, 1);
    const auto obs = make_series(truth, 60, 0.1, 33);
    std::vector<InferenceRun> runs{perfect_run(obs, truth, 0.001),
                                   perfect_run(obs, mat2(0, 1, 1, 0), 0.011)};
    // nudge the second run's prediction so scores differ
    for (auto& f : runs[1].predicted.frames) f *= 0.9;

    // within-subjects and between-subjects over paired metrics
    for (const auto& metric : paired_metric_names()) {
        SelectionScheme w;
        w.style = SelectionStyle::WithinSubjects;
        w.metric = metric;
        w.direction = default_within_direction(metric);
        CHECK_NOTHROW(select(runs, obs, w));
    }
    for (const char* metric : {"correlation", "crqa_rr", "crqa_det", "crqa_ent", "crqa_maxl"}) {
        SelectionScheme b;
        b.style = SelectionStyle::BetweenSubjects;
        b.metric = metric;
        CHECK_NOTHROW(select(runs, obs, b));
    }
    for (const auto& metric : standalone_metric_names()) {
        SelectionScheme s;
        s.style = SelectionStyle::Standalone;
        s.metric = metric;
        s.direction = Direction::Maximize;
        CHECK_NOTHROW(select(runs, obs, s));
    }
}

TEST_CASE("scheme names are stable strings") {
    SelectionScheme a;
    a.style = SelectionStyle::LowestSigma;
    CHECK(a.name() == "lowest_sigma");
    SelectionScheme b;
    b.style = SelectionStyle::BetweenSubjects;
    b.metric = "crqa_maxl";
    CHECK(b.name() == "between_subjects:crqa_maxl");
    SelectionScheme c;
    c.style = SelectionStyle::IdealOracle;
    CHECK(c.name() == "ideal_oracle");
}
