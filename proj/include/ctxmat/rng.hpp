#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ctxmat {

/// Portable xoshiro256++ generator. std::mt19937 plus the standard
/// distributions would not give bit-identical streams across standard
/// library implementations, so both the generator and the uniform/normal
/// transforms are fixed here.
///
/// Stream splitting: child(id) derives an independent stream by running the
/// parent seed and the id through splitmix64. Used for per-agent noise
/// streams and per-grid-index filter seeds.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    /// Independent stream derived from this generator's seed and an id.
    Rng child(std::uint64_t stream_id) const { return Rng(derive_seed(seed_, stream_id)); }

    /// Derive a child seed without constructing the generator.
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_id) {
        std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
        return splitmix64_mix(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix64_mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        return splitmix64_mix(x);
    }

    std::uint64_t state_[4]{};
    std::uint64_t seed_{};
    double spare_{};
    bool has_spare_{false};
};

}  // namespace ctxmat
