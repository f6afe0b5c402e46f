#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctxmat/core.hpp"
#include "ctxmat/inference.hpp"
#include "ctxmat/metrics.hpp"

namespace ctxmat {

enum class SelectionStyle { IdealOracle, LowestSigma, BetweenSubjects, WithinSubjects, Standalone };
enum class Direction { Maximize, Minimize };

/// How the winning grid-search run is chosen.
struct SelectionScheme {
    SelectionStyle style = SelectionStyle::LowestSigma;
    std::string metric;  // required for between/within/standalone styles
    Direction direction = Direction::Minimize;

    std::string name() const;
};

struct SelectionOutcome {
    std::size_t chosen_index = 0;
    double chosen_std = 0.0;
    std::vector<double> score_table;  // per run; NaN where a score failed
    SelectionScheme scheme;
};

/// Between-subjects score: the agent1-vs-agent2 relation metric computed on
/// the predicted pair and on the observed pair (averaged over channels
/// first), then |predicted relation - observed relation|. Lower is better.
double score_between_subjects(const InferenceRun& run, const BehaviorSeries& observed,
                              const std::string& metric, const CrqaConfig& crqa_config = {});

/// Within-subjects score: paired_metric(predicted, observed) per agent and
/// channel, averaged.
double score_within_subjects(const InferenceRun& run, const BehaviorSeries& observed,
                             const std::string& metric, const CrqaConfig& crqa_config = {});

/// Standalone score: standalone_metric of the predicted series averaged over
/// agents and channels; weighted_smoothness receives the matching observed
/// series.
double score_standalone(const InferenceRun& run, const BehaviorSeries& observed,
                        const std::string& metric);

/// Pick one run from the grid. ideal_oracle needs the ground-truth matrix
/// and an aggregation spec for the MAP series; ties break to the lower std.
SelectionOutcome select(const std::vector<InferenceRun>& runs, const BehaviorSeries& observed,
                        const SelectionScheme& scheme,
                        const std::optional<ContextMatrix>& truth = std::nullopt,
                        const AggregationSpec& oracle_agg = AggregationSpec::trial_mean(),
                        const CrqaConfig& crqa_config = {});

/// Paper defaults: within-subjects metrics where the maximum is preferred.
Direction default_within_direction(const std::string& metric);

/// Relation metric between two series, used by between-subjects scoring
/// (crqa_* or correlation).
double relation_metric(const Series& a, const Series& b, const std::string& metric,
                       const CrqaConfig& crqa_config = {});

}  // namespace ctxmat
