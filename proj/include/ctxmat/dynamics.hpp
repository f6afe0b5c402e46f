#pragma once

#include <cstdint>
#include <vector>

#include "ctxmat/core.hpp"
#include "ctxmat/rng.hpp"

namespace ctxmat {

/// Additive uniform noise on [-amplitude, amplitude], one independent
/// stream per agent derived from `seed`.
struct NoiseSpec {
    double amplitude = 0.0;
    std::uint64_t seed = 0;
};

/// Everything needed to generate one labeled synthetic dataset.
struct GroundTruthSpec {
    ContextMatrix matrix;
    NoiseSpec noise;
    std::size_t length = 500;
    DynamicsParams params;
    std::uint64_t init_seed = 0;
};

/// One step of the autoregressive model: C * b_prev * I - alpha * b_prev,
/// applied per channel column.
inline BehaviorFrame predict_step(const ContextMatrix& C, const BehaviorFrame& b_prev,
                                  const DynamicsParams& params) {
    if (C.rows() != C.cols() || C.cols() != b_prev.rows())
        throw DimensionError("predict_step: shape mismatch");
    return params.influence_scale * (C * b_prev) - params.decay * b_prev;
}

/// Generate a single-channel series: b1 ~ Uniform(0,1) per agent, then
/// b_t = predict_step(C, b_{t-1}) + eta_t with eta_t ~ Uniform(-a, a)
/// independently per agent. Fully determined by the two seeds.
BehaviorSeries simulate(const GroundTruthSpec& spec);

/// The 81 sign-pattern matrices (each 2x2 entry in {-1, 0, 1}) crossed with
/// the five noise amplitudes {0.05, 0.10, 0.15, 0.20, 0.25}, T = 500.
/// Matrices are enumerated as a base-3 counter over (c11, c12, c21, c22);
/// seeds are derived deterministically from `base_seed` and the spec index.
std::vector<GroundTruthSpec> ground_truth_grid(std::uint64_t base_seed = 0,
                                               const DynamicsParams& params = {});

/// Single matrix from the 81-matrix enumeration, index in 0..80.
ContextMatrix sign_pattern_matrix(std::size_t index);

}  // namespace ctxmat
