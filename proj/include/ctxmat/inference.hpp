#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ctxmat/core.hpp"
#include "ctxmat/dynamics.hpp"
#include "ctxmat/rng.hpp"

namespace ctxmat {

/// One candidate context matrix with its normalized weight.
struct Particle {
    ContextMatrix matrix;
    double weight = 0.0;
};

/// Particle population at one timestep. Matrices are stored flat (one
/// column-major flattened matrix per column) so the correction loop stays
/// allocation-free.
class ParticleSet {
  public:
    ParticleSet(Eigen::Index n, std::size_t N, Rng rng)
        : n_(n), data_(n * n, static_cast<Eigen::Index>(N)),
          weights_(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N),
                                             1.0 / static_cast<double>(N))),
          rng_(rng) {}

    std::size_t size() const { return static_cast<std::size_t>(data_.cols()); }
    Eigen::Index dim() const { return n_; }

    Eigen::Map<const ContextMatrix> matrix(std::size_t i) const {
        return {data_.col(static_cast<Eigen::Index>(i)).data(), n_, n_};
    }
    Eigen::Map<ContextMatrix> matrix(std::size_t i) {
        return {data_.col(static_cast<Eigen::Index>(i)).data(), n_, n_};
    }
    Particle particle(std::size_t i) const { return {matrix(i), weights_[static_cast<Eigen::Index>(i)]}; }

    const Eigen::VectorXd& weights() const { return weights_; }
    Eigen::VectorXd& weights() { return weights_; }
    Eigen::MatrixXd& data() { return data_; }
    const Eigen::MatrixXd& data() const { return data_; }
    Rng& rng() { return rng_; }

    int timestep = 0;

    /// 1 / sum(w^2), the weight-degeneracy diagnostic.
    double effective_sample_size() const { return 1.0 / weights_.squaredNorm(); }

  private:
    Eigen::Index n_;
    Eigen::MatrixXd data_;   // (n*n) x N
    Eigen::VectorXd weights_;
    Rng rng_;
};

/// Particle filter configuration. sigma_b is the per-agent-per-channel
/// variance table (diagonal of the likelihood covariance); when empty it is
/// computed from the input series.
struct FilterConfig {
    std::size_t particles = 100000;
    double jitter_std = 0.01;
    DynamicsParams params;
    Eigen::MatrixXd sigma_b;  // agents x channels variances; empty = derive from data
    std::uint64_t seed = 0;
};

/// Output of one filter run: the MAP matrix series C* (indices 2..T, so
/// length T-1) and the recursively predicted behavior series B* (length T,
/// with b*_1 = observed b_1).
struct InferenceRun {
    double jitter_std = 0.0;
    std::vector<ContextMatrix> map_series;
    BehaviorSeries predicted;
    std::vector<double> ess;          // per correction step
    std::size_t underflow_steps = 0;  // steps where every likelihood underflowed
    FilterConfig config;
};

/// Sample variance (n-1 denominator) of each agent x channel cell across the
/// whole series. Throws DegenerateVarianceError if any cell is ~zero.
Eigen::MatrixXd behavior_variances(const BehaviorSeries& series);

/// Log of the multi-channel likelihood: per channel, an n-dimensional normal
/// density of the observed column centered at predict_step(C, b_prev), with
/// diagonal covariance from sigma_b; channels multiply (sum in log space).
double log_likelihood(const ContextMatrix& C, const BehaviorFrame& b_prev,
                      const BehaviorFrame& b_obs, const Eigen::MatrixXd& sigma_b,
                      const DynamicsParams& params);

inline double likelihood(const ContextMatrix& C, const BehaviorFrame& b_prev,
                         const BehaviorFrame& b_obs, const Eigen::MatrixXd& sigma_b,
                         const DynamicsParams& params) {
    return std::exp(log_likelihood(C, b_prev, b_obs, sigma_b, params));
}

/// N matrices with i.i.d. standard-normal entries, uniform weights 1/N.
ParticleSet init_particles(const FilterConfig& config, Eigen::Index n);

/// Correction step: weights proportional to likelihood, normalized to sum 1.
/// Computed in log space with max-subtraction; if every log-likelihood is
/// -inf the weights fall back to uniform and the function returns false.
bool correct(ParticleSet& set, const BehaviorFrame& b_prev, const BehaviorFrame& b_obs,
             const FilterConfig& config);

/// Index of the highest-weight particle; ties break to the lowest index.
std::size_t map_index(const ParticleSet& set);

/// Systematic resampling proportional to weight; output weights uniform.
void resample(ParticleSet& set);

/// Perturb every matrix entry with independent N(0, sigma^2) noise.
void jitter(ParticleSet& set, double sigma);

/// Full filter: for t = 2..T correct, record MAP (pre-resample), resample,
/// jitter. The predicted series is built recursively from the MAP matrices
/// applied to previous *predicted* frames.
InferenceRun run_filter(const BehaviorSeries& series, const FilterConfig& config);

/// One independent run_filter per jitter std on the same data, each with a
/// seed derived from config.seed and the std's grid index.
std::vector<InferenceRun> grid_search(const BehaviorSeries& series, const FilterConfig& config,
                                      const std::vector<double>& stds, int threads = 1);

/// The paper-scale grid: 51 standard deviations 0.001 + 0.002k, k = 0..50.
/// Note the endpoint is 0.101 (51 values in steps of 0.002 starting at 0.001).
std::vector<double> default_std_grid();

}  // namespace ctxmat
