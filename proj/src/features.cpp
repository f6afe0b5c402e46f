#include "ctxmat/features.hpp"

#include <cmath>

namespace ctxmat {

namespace {
constexpr double kSignTol = 1e-9;
}

double relative_influence(const ContextMatrix& C) {
    if (C.rows() != C.cols() || C.rows() < 2)
        throw DimensionError("relative_influence: needs a square matrix, n >= 2");
    const double total = C.cwiseAbs().sum();
    if (total <= 0.0) throw UndefinedFeatureError("relative_influence: all-zero matrix");
    const double self = C.diagonal().cwiseAbs().sum();
    return (total - self) / total;
}

double leader_strength(const ContextMatrix& C) {
    if (C.rows() != 2 || C.cols() != 2)
        throw DimensionError("leader_strength: defined for 2x2 matrices");
    const double c12 = std::abs(C(0, 1));
    const double c21 = std::abs(C(1, 0));
    if (c12 + c21 <= 0.0) throw UndefinedFeatureError("leader_strength: both cross terms zero");
    return std::abs(c12 - c21) / (c12 + c21);
}

int leader_sign(const ContextMatrix& C) {
    if (C.rows() != 2 || C.cols() != 2)
        throw DimensionError("leader_sign: defined for 2x2 matrices");
    const double d = std::abs(C(0, 1)) - std::abs(C(1, 0));
    if (std::abs(d) <= kSignTol) return 0;
    return d > 0.0 ? 1 : -1;
}

double leader_switch_rate(const std::vector<ContextMatrix>& series, const IndexRange& range) {
    if (range.second > series.size() || range.first >= range.second)
        throw DimensionError("leader_switch_rate: range outside series");
    std::size_t flips = 0, pairs = 0;
    for (std::size_t i = range.first; i + 1 < range.second; ++i) {
        const int a = leader_sign(series[i]);
        const int b = leader_sign(series[i + 1]);
        if (a == 0 || b == 0) continue;
        ++pairs;
        if (a != b) ++flips;
    }
    if (pairs == 0) throw UndefinedFeatureError("leader_switch_rate: no non-zero sign pairs");
    return static_cast<double>(flips) / static_cast<double>(pairs);
}

FeatureSeries feature_series(const std::vector<ContextMatrix>& series) {
    FeatureSeries out;
    out.relative_influence.reserve(series.size());
    out.leader_strength.reserve(series.size());
    out.leader_sign.reserve(series.size());
    for (const auto& C : series) {
        try {
            out.relative_influence.push_back(relative_influence(C));
        } catch (const UndefinedFeatureError&) {
            out.relative_influence.push_back(std::nullopt);
        }
        try {
            out.leader_strength.push_back(leader_strength(C));
        } catch (const UndefinedFeatureError&) {
            out.leader_strength.push_back(std::nullopt);
        }
        out.leader_sign.push_back(leader_sign(C));
    }
    return out;
}

namespace {

BlockSummary block_mean(const std::vector<std::optional<double>>& vals, std::size_t lo,
                        std::size_t hi) {
    BlockSummary s;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        if (vals[i]) {
            sum += *vals[i];
            ++count;
        } else {
            ++s.undefined;
        }
    }
    if (count > 0) s.value = sum / static_cast<double>(count);
    return s;
}

BlockSummary block_final(const std::vector<std::optional<double>>& vals) {
    BlockSummary s;
    if (vals.back())
        s.value = *vals.back();
    else
        s.undefined = 1;
    return s;
}

}  // namespace

FeatureSummary summarize(const std::vector<ContextMatrix>& series) {
    if (series.empty()) throw EmptyInputError("summarize: empty series");
    const FeatureSeries fs = feature_series(series);

    FeatureSummary out;
    if (series.size() >= 4) {
        const auto bounds = quartile_bounds(series.size());
        for (std::size_t q = 0; q < 4; ++q) {
            out.relative_influence_quartile[q] =
                block_mean(fs.relative_influence, bounds[q].first, bounds[q].second);
            out.leader_strength_quartile[q] =
                block_mean(fs.leader_strength, bounds[q].first, bounds[q].second);
            try {
                out.switch_rate_quartile[q] = leader_switch_rate(series, bounds[q]);
            } catch (const UndefinedFeatureError&) {
            }
        }
    }
    out.relative_influence_trial = block_mean(fs.relative_influence, 0, series.size());
    out.leader_strength_trial = block_mean(fs.leader_strength, 0, series.size());
    out.relative_influence_final = block_final(fs.relative_influence);
    out.leader_strength_final = block_final(fs.leader_strength);
    try {
        out.switch_rate_trial = leader_switch_rate(series, {0, series.size()});
    } catch (const UndefinedFeatureError&) {
    }
    return out;
}

}  // namespace ctxmat
