#pragma once

#include "pdpowers/core_model.hpp"

#include <span>
#include <vector>

namespace pdpowers {

/// Exact value of a policy under a signal; V has H+1 layers, V[H] = 0.
struct DpResult {
    std::vector<std::vector<double>> V;
    StepTable Q;

    double value(int s) const { return V.front()[std::size_t(s)]; }
};

DpResult dp_evaluate(const CmdpInstance& inst, const PolicyTable& policy, const SignalTable& signal);

/// V_1^{signal,pi}(s1).
double policy_value(const CmdpInstance& inst, const PolicyTable& policy, const SignalTable& signal);

/// Episode-averaged reward (1/K) sum_{k=1}^K r^k.
SignalTable averaged_reward(const CmdpInstance& inst, long K);

/// Deterministic maximizer of reward + lam * g by backward induction; ties go to the lowest action.
PolicyTable lagrangian_greedy(const CmdpInstance& inst, const SignalTable& reward, double lam);

/// max_pi V_1^{g,pi}(s1).
double max_constraint_value(const CmdpInstance& inst);

/**
 * Optimal constrained policy as a mixture of two Lagrangian-greedy
 * deterministic policies: policy_hi is played with probability `weight`.
 */
struct ComparatorResult {
    PolicyTable policy_lo;
    PolicyTable policy_hi;
    double weight = 1.0;
    double value_r = 0.0;
    double value_g = 0.0;
    double lambda_star = 0.0;
    double gamma = 0.0;  // max_pi V^g(s1) - b

    /// Mixture value under an arbitrary signal (e.g. a single episode's reward).
    double value_under(const CmdpInstance& inst, const SignalTable& signal) const;
};

/**
 * Bisection on the multiplier over [0, 2H/tol]. Throws std::runtime_error when
 * even the constraint-greedy policy misses b.
 */
ComparatorResult constrained_comparator(const CmdpInstance& inst, const SignalTable& reward,
                                        double tol = 1e-8);

/**
 * Enumerates every deterministic Markov policy and every feasible two-policy
 * mixture; returns the best constrained objective. Limited to 1e5 policies.
 */
double brute_force_comparator(const CmdpInstance& inst, const SignalTable& reward);

struct RegretCurves {
    std::vector<double> regret;
    std::vector<double> violation;
};

/// Cumulative regret and positive-part cumulative violation from exact per-episode values.
RegretCurves metrics(std::span<const double> comparator_r, std::span<const double> policy_r,
                     std::span<const double> policy_g, double b);

}  // namespace pdpowers
