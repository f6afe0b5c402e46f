#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ctxmat/core.hpp"

namespace ctxmat {

/// Proportion of total absolute matrix mass on the cross terms:
/// (sum of off-diagonal |c_ij|) / (sum of all |c_ij|). In [0, 1].
double relative_influence(const ContextMatrix& C);

/// ||c12| - |c21|| / (|c12| + |c21|), defined for n = 2. In [0, 1].
double leader_strength(const ContextMatrix& C);

/// Sign of |c12| - |c21| with tolerance 1e-9 for "zero". -1, 0 or +1.
int leader_sign(const ContextMatrix& C);

/// Proportion of adjacent non-zero-sign pairs whose leader sign flips, over
/// the half-open index range. Zero-sign timepoints are excluded from both
/// numerator and denominator.
double leader_switch_rate(const std::vector<ContextMatrix>& series, const IndexRange& range);

/// Per-timepoint feature values aligned with a MAP matrix series.
/// Undefined values (all-zero mass) are stored as nullopt.
struct FeatureSeries {
    std::vector<std::optional<double>> relative_influence;
    std::vector<std::optional<double>> leader_strength;
    std::vector<int> leader_sign;
};

FeatureSeries feature_series(const std::vector<ContextMatrix>& series);

/// Mean over defined values in a block; count of undefined values reported.
struct BlockSummary {
    std::optional<double> value;
    std::size_t undefined = 0;
};

/// Quartile, trial-mean and final aggregations of both pointwise features,
/// plus leader switch rate per quartile and for the whole series.
struct FeatureSummary {
    BlockSummary relative_influence_quartile[4];
    BlockSummary relative_influence_trial;
    BlockSummary relative_influence_final;
    BlockSummary leader_strength_quartile[4];
    BlockSummary leader_strength_trial;
    BlockSummary leader_strength_final;
    std::optional<double> switch_rate_quartile[4];
    std::optional<double> switch_rate_trial;
};

FeatureSummary summarize(const std::vector<ContextMatrix>& series);

}  // namespace ctxmat
