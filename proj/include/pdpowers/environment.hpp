#pragma once

#include "pdpowers/core_model.hpp"

#include <cstdint>
#include <vector>

namespace pdpowers {

/// Parameters of the chain benchmark with an absorbing failure state.
struct BenchmarkParams {
    int H = 10;
    int d = 5;
    double b = 6.0;
    int block_length = 10;
    double p0 = 0.95;
    double slope = 0.01;
    double reward_scale = 0.4;
    /// Scale c of theta* = c * (p0, -slope * 1); features carry 1/c.
    double feature_scale = 2.3;
    double B = 3.0;

    /// Throws std::invalid_argument naming the first bad field.
    void validate() const;
};

/// Sign vector of action index `a` over d-1 coordinates, lexicographic (-1 < +1).
std::vector<int> sign_action(int a, int d);

/// Fraction of +1 coordinates: sum_i (a_i + 1) / (2(d-1)).
double plus_fraction(int a, int d);

/**
 * States 0..H+1, 2^(d-1) actions, s1 = 0. For s < H the chain advances with
 * probability p0 - slope * 1'a and otherwise falls into H+1; H and H+1 absorb.
 * Rewards alternate between blocks of `block_length` episodes.
 * Throws if the constructed instance fails validation.
 */
CmdpInstance build_benchmark_instance(const BenchmarkParams& p);

/// Fixed H=3, |S|=4, |A|=2, d=2 instance whose constraint binds (b = 1.5).
CmdpInstance build_tiny_instance();

/**
 * Counter-based random stream: every draw is a pure function of
 * (seed, episode, step, draw index), so runs reproduce bit-for-bit regardless
 * of thread scheduling.
 */
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform double in [0,1) with 53 random bits.
    double uniform(long k, int h, std::uint64_t draw) const;

private:
    std::uint64_t seed_;
};

/// Index drawn from `probs` by inverse CDF on u; skips zero-mass entries.
int sample_index(std::span<const double> probs, double u);

/**
 * Samples one episode under `policy` and attaches the rewards of episode k
 * once the trajectory is complete.
 */
EpisodeRecord rollout(const CmdpInstance& inst, const PolicyTable& policy, long k,
                      const RngStream& rng);

}  // namespace pdpowers
