#include "ctxmat/inference.hpp"

#include <cmath>
#include <cstring>
#include <future>
#include <limits>
#include <numbers>

namespace ctxmat {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}

Eigen::MatrixXd behavior_variances(const BehaviorSeries& series) {
    series.validate();
    const Eigen::Index n = series.agents();
    const Eigen::Index H = series.channels();
    const double T = static_cast<double>(series.length());

    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, H);
    for (const auto& f : series.frames) mean += f;
    mean /= T;

    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(n, H);
    for (const auto& f : series.frames) var += (f - mean).cwiseAbs2();
    var /= (T - 1.0);

    if ((var.array() <= 1e-300).any())
        throw DegenerateVarianceError("behavior_variances: a channel has zero variance");
    return var;
}

double log_likelihood(const ContextMatrix& C, const BehaviorFrame& b_prev,
                      const BehaviorFrame& b_obs, const Eigen::MatrixXd& sigma_b,
                      const DynamicsParams& params) {
    if ((sigma_b.array() <= 0.0).any())
        throw ConfigError("log_likelihood: non-positive covariance entry");
    if (b_prev.rows() != b_obs.rows() || b_prev.cols() != b_obs.cols() ||
        sigma_b.rows() != b_prev.rows() || sigma_b.cols() != b_prev.cols())
        throw DimensionError("log_likelihood: shape mismatch");

    const BehaviorFrame pred = predict_step(C, b_prev, params);
    double ll = 0.0;
    for (Eigen::Index h = 0; h < b_obs.cols(); ++h) {
        for (Eigen::Index i = 0; i < b_obs.rows(); ++i) {
            const double s2 = sigma_b(i, h);
            const double d = b_obs(i, h) - pred(i, h);
            ll += -0.5 * (kLog2Pi + std::log(s2)) - d * d / (2.0 * s2);
        }
    }
    return ll;
}

ParticleSet init_particles(const FilterConfig& config, Eigen::Index n) {
    if (config.particles < 1) throw ConfigError("init_particles: N must be >= 1");
    if (n < 2) throw ConfigError("init_particles: n must be >= 2");
    Rng base(config.seed);
    ParticleSet set(n, config.particles, base.child(1));
    Rng init = base.child(0);
    auto& data = set.data();
    for (Eigen::Index j = 0; j < data.cols(); ++j)
        for (Eigen::Index k = 0; k < data.rows(); ++k) data(k, j) = init.normal();
    set.timestep = 2;
    return set;
}

bool correct(ParticleSet& set, const BehaviorFrame& b_prev, const BehaviorFrame& b_obs,
             const FilterConfig& config) {
    const std::size_t N = set.size();
    if (N == 0) throw EmptyInputError("correct: empty particle set");
    const Eigen::Index n = set.dim();
    const Eigen::Index H = b_obs.cols();
    const Eigen::MatrixXd& var = config.sigma_b;
    if (var.rows() != n || var.cols() != H)
        throw DimensionError("correct: sigma_b shape mismatch");
    if ((var.array() <= 0.0).any()) throw ConfigError("correct: non-positive covariance");

    // constant part of the log-density and precomputed 1/(2*sigma^2)
    double const_term = 0.0;
    Eigen::MatrixXd half_inv(n, H);
    for (Eigen::Index h = 0; h < H; ++h)
        for (Eigen::Index i = 0; i < n; ++i) {
            const_term += -0.5 * (kLog2Pi + std::log(var(i, h)));
            half_inv(i, h) = 0.5 / var(i, h);
        }

    const double scale = config.params.influence_scale;
    const double decay = config.params.decay;
    const Eigen::MatrixXd decayed = decay * b_prev;

    Eigen::VectorXd& w = set.weights();
    double max_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < N; ++p) {
        const auto C = set.matrix(p);
        double ll = 0.0;
        for (Eigen::Index h = 0; h < H; ++h)
            for (Eigen::Index i = 0; i < n; ++i) {
                double pred = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) pred += C(i, j) * b_prev(j, h);
                const double d = b_obs(i, h) - (scale * pred - decayed(i, h));
                ll -= d * d * half_inv(i, h);
            }
        if (std::isnan(ll)) ll = -std::numeric_limits<double>::infinity();
        w[static_cast<Eigen::Index>(p)] = ll;
        if (ll > max_ll) max_ll = ll;
    }
    (void)const_term;  // cancels in the normalization

    if (!std::isfinite(max_ll)) {
        w.setConstant(1.0 / static_cast<double>(N));
        return false;
    }
    double sum = 0.0;
    for (Eigen::Index p = 0; p < w.size(); ++p) {
        w[p] = std::exp(w[p] - max_ll);
        sum += w[p];
    }
    w /= sum;
    return true;
}

std::size_t map_index(const ParticleSet& set) {
    const auto& w = set.weights();
    std::size_t best = 0;
    for (Eigen::Index p = 1; p < w.size(); ++p)
        if (w[p] > w[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(p);
    return best;
}

void resample(ParticleSet& set) {
    const std::size_t N = set.size();
    const Eigen::VectorXd& w = set.weights();
    const double u0 = set.rng().uniform() / static_cast<double>(N);

    Eigen::MatrixXd out(set.data().rows(), set.data().cols());
    double cum = w[0];
    std::size_t src = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const double point = u0 + static_cast<double>(i) / static_cast<double>(N);
        while (point > cum && src + 1 < N) {
            ++src;
            cum += w[static_cast<Eigen::Index>(src)];
        }
        out.col(static_cast<Eigen::Index>(i)) = set.data().col(static_cast<Eigen::Index>(src));
    }
    set.data() = std::move(out);
    set.weights().setConstant(1.0 / static_cast<double>(N));
}

void jitter(ParticleSet& set, double sigma) {
    if (sigma <= 0.0) throw ConfigError("jitter: sigma must be > 0");
    auto& data = set.data();
    Rng& rng = set.rng();
    for (Eigen::Index j = 0; j < data.cols(); ++j)
        for (Eigen::Index k = 0; k < data.rows(); ++k) data(k, j) += sigma * rng.normal();
}

InferenceRun run_filter(const BehaviorSeries& series, const FilterConfig& config) {
    series.validate();
    const std::size_t T = series.length();

    FilterConfig cfg = config;
    if (cfg.sigma_b.size() == 0) cfg.sigma_b = behavior_variances(series);

    InferenceRun run;
    run.jitter_std = cfg.jitter_std;
    run.config = cfg;
    run.map_series.reserve(T - 1);
    run.ess.reserve(T - 1);

    ParticleSet set = init_particles(cfg, series.agents());
    for (std::size_t t = 1; t < T; ++t) {
        const bool ok = correct(set, series.frames[t - 1], series.frames[t], cfg);
        if (!ok) ++run.underflow_steps;
        run.ess.push_back(set.effective_sample_size());
        run.map_series.emplace_back(set.matrix(map_index(set)));
        resample(set);
        jitter(set, cfg.jitter_std);
        set.timestep = static_cast<int>(t) + 2;
    }

    // predicted series: recursion on predicted frames, not observed ones
    run.predicted.agent_labels = series.agent_labels;
    run.predicted.channel_labels = series.channel_labels;
    run.predicted.trial_starts = series.trial_starts;
    run.predicted.frames.reserve(T);
    run.predicted.frames.push_back(series.frames.front());
    for (std::size_t t = 1; t < T; ++t)
        run.predicted.frames.push_back(
            predict_step(run.map_series[t - 1], run.predicted.frames[t - 1], cfg.params));
    return run;
}

std::vector<InferenceRun> grid_search(const BehaviorSeries& series, const FilterConfig& config,
                                      const std::vector<double>& stds, int threads) {
    if (stds.empty()) throw EmptyInputError("grid_search: empty std list");
    std::vector<InferenceRun> runs(stds.size());

    auto run_one = [&](std::size_t k) {
        FilterConfig cfg = config;
        cfg.jitter_std = stds[k];
        // seed derived from the std value itself, so a single grid point is
        // reproducible in isolation and equal stds give equal outputs
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof stds[k]);
        std::memcpy(&bits, &stds[k], sizeof bits);
        cfg.seed = Rng::derive_seed(config.seed, bits);
        runs[k] = run_filter(series, cfg);
    };

    if (threads <= 1) {
        for (std::size_t k = 0; k < stds.size(); ++k) run_one(k);
    } else {
        std::vector<std::future<void>> futures;
        std::size_t next = 0;
        while (next < stds.size()) {
            futures.clear();
            const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                            stds.size() - next);
            for (std::size_t b = 0; b < batch; ++b)
                futures.push_back(std::async(std::launch::async, run_one, next + b));
            for (auto& f : futures) f.get();
            next += batch;
        }
    }
    return runs;
}

std::vector<double> default_std_grid() {
    std::vector<double> stds;
    stds.reserve(51);
    for (int k = 0; k < 51; ++k) stds.push_back(0.001 + 0.002 * k);
    return stds;
}

}  // namespace ctxmat
