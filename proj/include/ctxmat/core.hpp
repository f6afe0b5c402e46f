#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ctxmat/errors.hpp"

namespace ctxmat {

/// n x n influence matrix. Row = affected agent, column = source agent:
/// entry (i, j) is how much agent j's past behavior drives agent i's
/// current behavior. Diagonal = self-influence, off-diagonal = cross-influence.
using ContextMatrix = Eigen::MatrixXd;

/// Per-timepoint behavior: agents x channels, z-scored units.
using BehaviorFrame = Eigen::MatrixXd;

/// Scalars of the autoregressive behavior model b_t = C b_{t-1} * I - alpha * b_{t-1}.
struct DynamicsParams {
    double influence_scale = 0.5;
    double decay = 0.1;
};

/// Ordered series of behavior frames with label metadata. All frames share
/// one agents x channels shape. trial_starts (optional) marks the first
/// frame index of each concatenated trial.
struct BehaviorSeries {
    std::vector<BehaviorFrame> frames;
    std::vector<std::string> agent_labels;
    std::vector<std::string> channel_labels;
    std::vector<std::size_t> trial_starts;

    std::size_t length() const { return frames.size(); }
    Eigen::Index agents() const { return frames.empty() ? 0 : frames.front().rows(); }
    Eigen::Index channels() const { return frames.empty() ? 0 : frames.front().cols(); }

    void validate() const {
        if (frames.size() < 2) throw TooShortError("behavior series needs at least 2 frames");
        const auto rows = frames.front().rows();
        const auto cols = frames.front().cols();
        if (cols < 1) throw DimensionError("behavior series needs at least 1 channel");
        for (const auto& f : frames) {
            if (f.rows() != rows || f.cols() != cols)
                throw DimensionError("behavior frames have inconsistent shapes");
            if (!f.allFinite()) throw DimensionError("behavior frame has non-finite entries");
        }
    }
};

enum class AggregationMode { QuartileMean, TrialMean, Final };

/// How a matrix (or feature) series is collapsed to a single value.
struct AggregationSpec {
    AggregationMode mode = AggregationMode::TrialMean;
    int quartile = 1;  // 1..4, used only for QuartileMean

    static AggregationSpec quartile_mean(int q) { return {AggregationMode::QuartileMean, q}; }
    static AggregationSpec trial_mean() { return {AggregationMode::TrialMean, 0}; }
    static AggregationSpec final() { return {AggregationMode::Final, 0}; }

    std::string name() const {
        switch (mode) {
            case AggregationMode::QuartileMean: return "q" + std::to_string(quartile);
            case AggregationMode::TrialMean: return "trial_mean";
            case AggregationMode::Final: return "final";
        }
        return "?";
    }
};

using IndexRange = std::pair<std::size_t, std::size_t>;  // half-open [first, second)

/// Partition 0..T-1 into four contiguous half-open ranges with sizes
/// differing by at most one. When T mod 4 != 0, the earlier quartiles take
/// the extra indices.
inline std::array<IndexRange, 4> quartile_bounds(std::size_t T) {
    if (T < 4) throw TooShortError("quartile_bounds requires T >= 4");
    const std::size_t base = T / 4;
    const std::size_t rem = T % 4;
    std::array<IndexRange, 4> out{};
    std::size_t start = 0;
    for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t len = base + (q < rem ? 1 : 0);
        out[q] = {start, start + len};
        start += len;
    }
    return out;
}

/// Mean absolute entrywise difference ("mean absolute difference between the
/// four cells" for n = 2; mean over n^2 cells in general).
inline double matrix_error(const ContextMatrix& a, const ContextMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("matrix_error: shape mismatch");
    return (a - b).cwiseAbs().mean();
}

/// Entrywise mean of the matrices selected by the aggregation spec.
inline ContextMatrix aggregate_matrices(const std::vector<ContextMatrix>& series,
                                        const AggregationSpec& spec) {
    if (series.empty()) throw EmptyInputError("aggregate_matrices: empty series");
    switch (spec.mode) {
        case AggregationMode::Final:
            return series.back();
        case AggregationMode::TrialMean: {
            ContextMatrix acc = ContextMatrix::Zero(series[0].rows(), series[0].cols());
            for (const auto& m : series) acc += m;
            return acc / static_cast<double>(series.size());
        }
        case AggregationMode::QuartileMean: {
            if (spec.quartile < 1 || spec.quartile > 4)
                throw ConfigError("quartile must be in 1..4");
            const auto bounds = quartile_bounds(series.size());
            const auto [lo, hi] = bounds[static_cast<std::size_t>(spec.quartile - 1)];
            ContextMatrix acc = ContextMatrix::Zero(series[0].rows(), series[0].cols());
            for (std::size_t i = lo; i < hi; ++i) acc += series[i];
            return acc / static_cast<double>(hi - lo);
        }
    }
    throw ConfigError("unknown aggregation mode");
}

}  // namespace ctxmat
