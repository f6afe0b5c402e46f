#include "ctxmat/dynamics.hpp"

#include <string>

namespace ctxmat {

BehaviorSeries simulate(const GroundTruthSpec& spec) {
    if (spec.length < 2) throw TooShortError("simulate: length must be >= 2");
    if (spec.matrix.rows() != spec.matrix.cols())
        throw DimensionError("simulate: matrix must be square");
    if (spec.noise.amplitude < 0.0) throw ConfigError("simulate: negative noise amplitude");

    const Eigen::Index n = spec.matrix.rows();

    Rng init_rng(spec.init_seed);
    std::vector<Rng> noise_rngs;
    noise_rngs.reserve(static_cast<std::size_t>(n));
    Rng noise_base(spec.noise.seed);
    for (Eigen::Index i = 0; i < n; ++i)
        noise_rngs.push_back(noise_base.child(static_cast<std::uint64_t>(i)));

    BehaviorSeries series;
    series.frames.reserve(spec.length);
    for (Eigen::Index i = 0; i < n; ++i)
        series.agent_labels.push_back("agent" + std::to_string(i + 1));
    series.channel_labels.push_back("b");

    BehaviorFrame b = BehaviorFrame::Zero(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) b(i, 0) = init_rng.uniform();
    series.frames.push_back(b);

    const double a = spec.noise.amplitude;
    for (std::size_t t = 1; t < spec.length; ++t) {
        b = predict_step(spec.matrix, b, spec.params);
        if (a > 0.0)
            for (Eigen::Index i = 0; i < n; ++i) b(i, 0) += noise_rngs[static_cast<std::size_t>(i)].uniform(-a, a);
        series.frames.push_back(b);
    }
    return series;
}

ContextMatrix sign_pattern_matrix(std::size_t index) {
    if (index >= 81) throw ConfigError("sign_pattern_matrix: index must be < 81");
    // base-3 counter, most significant digit = c11, then c12, c21, c22
    double vals[4];
    std::size_t rest = index;
    for (int k = 3; k >= 0; --k) {
        vals[k] = static_cast<double>(rest % 3) - 1.0;
        rest /= 3;
    }
    ContextMatrix C(2, 2);
    C << vals[0], vals[1], vals[2], vals[3];
    return C;
}

std::vector<GroundTruthSpec> ground_truth_grid(std::uint64_t base_seed,
                                               const DynamicsParams& params) {
    const double amplitudes[] = {0.05, 0.10, 0.15, 0.20, 0.25};
    std::vector<GroundTruthSpec> specs;
    specs.reserve(405);
    std::size_t idx = 0;
    for (std::size_t m = 0; m < 81; ++m) {
        for (double a : amplitudes) {
            GroundTruthSpec spec;
            spec.matrix = sign_pattern_matrix(m);
            spec.noise.amplitude = a;
            spec.noise.seed = Rng::derive_seed(base_seed, 2 * idx);
            spec.init_seed = Rng::derive_seed(base_seed, 2 * idx + 1);
            spec.length = 500;
            spec.params = params;
            specs.push_back(std::move(spec));
            ++idx;
        }
    }
    return specs;
}

}  // namespace ctxmat
