#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctxmat/errors.hpp"

namespace ctxmat {

using Series = std::vector<double>;

/// Cross-recurrence analysis hyperparameters. Defaults follow the reference
/// configuration: m = 3, tau = 2, epsilon = 0.84 (z-score units), l_min = 2.
struct CrqaConfig {
    int embed_dim = 3;
    int delay = 2;
    double radius = 0.84;
    int l_min = 2;
};

struct CrqaMetrics {
    double rr = 0.0;    // recurrence rate, in [0, 1]
    double det = 0.0;   // fraction of recurrent points on diagonal lines >= l_min
    double ent = 0.0;   // Shannon entropy (natural log) of line lengths >= l_min
    int maxl = 0;       // longest diagonal line
};

/// Cross-recurrence quantification of two series. Both series are z-scored
/// internally, time-delay embedded, and compared with the Euclidean norm.
CrqaMetrics crqa(const Series& x, const Series& y, const CrqaConfig& config = {});

struct GcResult {
    double gc_1to2 = 0.0;  // LR statistic, agent 1's past predicting agent 2
    double gc_2to1 = 0.0;
    int lag = 0;           // BIC-selected VAR order, 1..12
    bool used_first_differences = false;
};

/// Bivariate Granger causality: z-score, fit VAR with intercept over lag
/// orders 1..12, pick the lag by minimum BIC, then run both directional
/// likelihood-ratio tests. Non-finite statistics trigger a retry on first
/// differences.
GcResult granger(const Series& x, const Series& y);

/// Normalized absolute asymmetry |g12 - g21| / (g12 + g21) per channel,
/// averaged over channels. Channels with a zero denominator are skipped.
double gc_strength(const std::vector<GcResult>& channels);

/// Z-score a series in place conventions: sample std (n-1). Throws on
/// zero variance.
Series zscore(const Series& x);

// Stable metric identifiers. Standalone metrics of one series:
//   variance, hjorth_mobility, hjorth_complexity, smoothness,
//   weighted_smoothness (needs the observed series as auxiliary input),
//   dominant_frequency, spectral_entropy, autocorrelation,
//   partial_autocorrelation, trend_strength, peaks, troughs
// Paired (predicted vs observed) metrics:
//   correlation, mse, r2, norm_sum_derivative_error,
//   variance_derivative_error, variance_difference, norm_variance_difference,
//   crqa_rr, crqa_det, crqa_ent, crqa_maxl

/// Scalar property of a single series. `aux` is required only for
/// weighted_smoothness (the observed series whose variance scales the sum).
double standalone_metric(const Series& x, const std::string& name,
                         const Series* aux = nullptr);

/// Scalar comparing a predicted series against an observed one.
double paired_metric(const Series& pred, const Series& obs, const std::string& name,
                     const CrqaConfig& crqa_config = {});

/// Pearson correlation of two equal-length series.
double correlation(const Series& a, const Series& b);

const std::vector<std::string>& standalone_metric_names();
const std::vector<std::string>& paired_metric_names();

}  // namespace ctxmat
