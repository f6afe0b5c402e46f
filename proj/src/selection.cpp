#include "ctxmat/selection.hpp"

#include <cmath>
#include <limits>

namespace ctxmat {

namespace {

Series channel_series(const BehaviorSeries& s, Eigen::Index agent, Eigen::Index channel) {
    Series out;
    out.reserve(s.length());
    for (const auto& f : s.frames) out.push_back(f(agent, channel));
    return out;
}

}  // namespace

std::string SelectionScheme::name() const {
    switch (style) {
        case SelectionStyle::IdealOracle: return "ideal_oracle";
        case SelectionStyle::LowestSigma: return "lowest_sigma";
        case SelectionStyle::BetweenSubjects: return "between_subjects:" + metric;
        case SelectionStyle::WithinSubjects: return "within_subjects:" + metric;
        case SelectionStyle::Standalone: return "standalone:" + metric;
    }
    return "?";
}

double relation_metric(const Series& a, const Series& b, const std::string& metric,
                       const CrqaConfig& crqa_config) {
    if (metric == "correlation") return correlation(a, b);
    if (metric == "crqa_rr") return crqa(a, b, crqa_config).rr;
    if (metric == "crqa_det") return crqa(a, b, crqa_config).det;
    if (metric == "crqa_ent") return crqa(a, b, crqa_config).ent;
    if (metric == "crqa_maxl") return static_cast<double>(crqa(a, b, crqa_config).maxl);
    throw ConfigError("unknown between-subjects relation metric: " + metric);
}

double score_between_subjects(const InferenceRun& run, const BehaviorSeries& observed,
                              const std::string& metric, const CrqaConfig& crqa_config) {
    const BehaviorSeries& pred = run.predicted;
    if (pred.length() != observed.length() || pred.agents() != observed.agents() ||
        pred.channels() != observed.channels())
        throw DimensionError("score_between_subjects: shape mismatch");
    if (pred.agents() < 2) throw DimensionError("score_between_subjects: needs two agents");

    double rel_pred = 0.0, rel_obs = 0.0;
    const Eigen::Index H = pred.channels();
    for (Eigen::Index h = 0; h < H; ++h) {
        rel_pred += relation_metric(channel_series(pred, 0, h), channel_series(pred, 1, h),
                                    metric, crqa_config);
        rel_obs += relation_metric(channel_series(observed, 0, h), channel_series(observed, 1, h),
                                   metric, crqa_config);
    }
    rel_pred /= static_cast<double>(H);
    rel_obs /= static_cast<double>(H);
    return std::abs(rel_pred - rel_obs);
}

double score_within_subjects(const InferenceRun& run, const BehaviorSeries& observed,
                             const std::string& metric, const CrqaConfig& crqa_config) {
    const BehaviorSeries& pred = run.predicted;
    if (pred.length() != observed.length() || pred.agents() != observed.agents() ||
        pred.channels() != observed.channels())
        throw DimensionError("score_within_subjects: shape mismatch");

    double sum = 0.0;
    for (Eigen::Index a = 0; a < pred.agents(); ++a)
        for (Eigen::Index h = 0; h < pred.channels(); ++h)
            sum += paired_metric(channel_series(pred, a, h), channel_series(observed, a, h),
                                 metric, crqa_config);
    return sum / static_cast<double>(pred.agents() * pred.channels());
}

double score_standalone(const InferenceRun& run, const BehaviorSeries& observed,
                        const std::string& metric) {
    const BehaviorSeries& pred = run.predicted;
    double sum = 0.0;
    for (Eigen::Index a = 0; a < pred.agents(); ++a)
        for (Eigen::Index h = 0; h < pred.channels(); ++h) {
            const Series p = channel_series(pred, a, h);
            if (metric == "weighted_smoothness") {
                const Series o = channel_series(observed, a, h);
                sum += standalone_metric(p, metric, &o);
            } else {
                sum += standalone_metric(p, metric);
            }
        }
    return sum / static_cast<double>(pred.agents() * pred.channels());
}

Direction default_within_direction(const std::string& metric) {
    if (metric == "correlation" || metric == "r2" || metric == "norm_sum_derivative_error" ||
        metric == "crqa_rr" || metric == "crqa_det" || metric == "crqa_ent" ||
        metric == "crqa_maxl")
        return Direction::Maximize;
    return Direction::Minimize;
}

SelectionOutcome select(const std::vector<InferenceRun>& runs, const BehaviorSeries& observed,
                        const SelectionScheme& scheme, const std::optional<ContextMatrix>& truth,
                        const AggregationSpec& oracle_agg, const CrqaConfig& crqa_config) {
    if (runs.empty()) throw EmptyInputError("select: no runs");
    if (scheme.style == SelectionStyle::IdealOracle && !truth)
        throw ConfigError("select: ideal_oracle requires ground truth");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    SelectionOutcome outcome;
    outcome.scheme = scheme;
    outcome.score_table.assign(runs.size(), nan);

    // direction of optimization for the scheme's score
    Direction dir = Direction::Minimize;
    switch (scheme.style) {
        case SelectionStyle::IdealOracle:
        case SelectionStyle::LowestSigma:
        case SelectionStyle::BetweenSubjects:
            dir = Direction::Minimize;
            break;
        case SelectionStyle::WithinSubjects:
        case SelectionStyle::Standalone:
            dir = scheme.direction;
            break;
    }

    for (std::size_t k = 0; k < runs.size(); ++k) {
        try {
            switch (scheme.style) {
                case SelectionStyle::IdealOracle:
                    outcome.score_table[k] =
                        matrix_error(aggregate_matrices(runs[k].map_series, oracle_agg), *truth);
                    break;
                case SelectionStyle::LowestSigma:
                    outcome.score_table[k] = runs[k].jitter_std;
                    break;
                case SelectionStyle::BetweenSubjects:
                    outcome.score_table[k] =
                        score_between_subjects(runs[k], observed, scheme.metric, crqa_config);
                    break;
                case SelectionStyle::WithinSubjects:
                    outcome.score_table[k] =
                        score_within_subjects(runs[k], observed, scheme.metric, crqa_config);
                    break;
                case SelectionStyle::Standalone:
                    outcome.score_table[k] = score_standalone(runs[k], observed, scheme.metric);
                    break;
            }
        } catch (const Error&) {
            // score stays NaN; run excluded from the argopt
        }
    }

    bool found = false;
    std::size_t best = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const double s = outcome.score_table[k];
        if (std::isnan(s)) continue;
        if (!found) {
            best = k;
            found = true;
            continue;
        }
        const double b = outcome.score_table[best];
        const bool better = dir == Direction::Minimize ? s < b : s > b;
        const bool tie = s == b && runs[k].jitter_std < runs[best].jitter_std;
        if (better || tie) best = k;
    }
    if (!found) throw ConfigError("select: every run failed to score");

    outcome.chosen_index = best;
    outcome.chosen_std = runs[best].jitter_std;
    return outcome;
}

}  // namespace ctxmat
