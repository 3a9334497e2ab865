#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pdpowers {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One nonzero feature vector phi(s'|s,a) of a feature map.
struct SupportEntry {
    int next_state;
    Vec phi;
};

/**
 * Feature map of a linear mixture CMDP.
 *
 * Each (s,a) declares the next states with a nonzero feature vector, so that
 * integrating a value function costs O(|support| * d) instead of O(|S| * d).
 */
class FeatureMap {
public:
    FeatureMap(int dim, int num_states, int num_actions);

    int dim() const { return dim_; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    /// Appends phi(next|s,a); a repeated next state is accumulated.
    void add(int s, int a, int next, const Vec& phi);

    const std::vector<SupportEntry>& support(int s, int a) const;

    /// phi(next|s,a), zero when next is outside the support.
    Vec phi(int next, int s, int a) const;

    /// Integrated feature sum_{s'} phi(s'|s,a) V(s').
    Vec phi_V(std::span<const double> V, int s, int a) const;

    /// Throws if some (s,a) has an empty support.
    void check_complete() const;

private:
    void check_pair(int s, int a) const;

    int dim_;
    int num_states_;
    int num_actions_;
    std::vector<std::vector<SupportEntry>> support_;
};

/// Dense table indexed by (step, state, action); steps are 0-based.
class StepTable {
public:
    StepTable() = default;
    StepTable(int H, int S, int A, double fill = 0.0)
        : H_(H), S_(S), A_(A), data_(std::size_t(H) * S * A, fill) {}

    double& operator()(int h, int s, int a) { return data_[index(h, s, a)]; }
    double operator()(int h, int s, int a) const { return data_[index(h, s, a)]; }

    std::span<double> row(int h, int s) { return {data_.data() + index(h, s, 0), std::size_t(A_)}; }
    std::span<const double> row(int h, int s) const {
        return {data_.data() + index(h, s, 0), std::size_t(A_)};
    }

    int horizon() const { return H_; }
    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const StepTable&) const = default;

private:
    std::size_t index(int h, int s, int a) const {
        return (std::size_t(h) * S_ + std::size_t(s)) * A_ + std::size_t(a);
    }

    int H_ = 0;
    int S_ = 0;
    int A_ = 0;
    std::vector<double> data_;
};

/// Reward or constraint signal l_h(s,a) for one episode.
using SignalTable = StepTable;

/// Adversarial reward schedule r_h^k(s,a); k is 1-based, h is 0-based.
using RewardSchedule = std::function<double(long k, int h, int s, int a)>;

/**
 * Finite-horizon linear mixture CMDP with an oblivious reward schedule and a
 * fixed known constraint g. Transition parameters theta_star are known only to
 * the simulator and the oracles.
 */
struct CmdpInstance {
    std::string name;
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    FeatureMap features{1, 1, 1};
    std::vector<Vec> theta_star;  // one per step
    double B = 1.0;
    RewardSchedule reward;
    SignalTable constraint;  // g_h(s,a)
    double threshold = 0.0;  // b
    int initial_state = 0;

    /// Full-information reward table of episode k.
    SignalTable reward_table(long k) const;
};

/// <phi(next|s,a), theta*_h>, zero outside the declared support.
double transition_prob(const CmdpInstance& inst, int h, int s, int a, int next);

/// r_h^k(s,a) with index checks.
double reward_at(const CmdpInstance& inst, long k, int h, int s, int a);

/// Stochastic Markov policy pi_h(a|s).
class PolicyTable {
public:
    PolicyTable() = default;
    PolicyTable(int H, int S, int A) : probs_(H, S, A, 0.0) {}

    static PolicyTable uniform(int H, int S, int A);
    /// One-hot policy from an action per (h,s), stored h-major.
    static PolicyTable deterministic(int H, int S, int A, std::span<const int> actions);

    double operator()(int h, int s, int a) const { return probs_(h, s, a); }
    double& operator()(int h, int s, int a) { return probs_(h, s, a); }
    std::span<const double> row(int h, int s) const { return probs_.row(h, s); }
    std::span<double> row(int h, int s) { return probs_.row(h, s); }

    int horizon() const { return probs_.horizon(); }
    int num_states() const { return probs_.num_states(); }
    int num_actions() const { return probs_.num_actions(); }

    /// Largest |sum - 1| over rows; negative entries are reported as +inf.
    double max_simplex_error() const;

    bool operator==(const PolicyTable&) const = default;

private:
    StepTable probs_;
};

/// Optimistic Q/V estimates of one signal. V has H+1 layers with V[H] = 0.
struct ValueTables {
    StepTable Q;
    std::vector<std::vector<double>> V;

    ValueTables() = default;
    ValueTables(int H, int S, int A)
        : Q(H, S, A, 0.0), V(std::size_t(H) + 1, std::vector<double>(std::size_t(S), 0.0)) {}
};

struct EpisodeRecord {
    long k = 0;
    std::vector<int> states;   // H+1 entries
    std::vector<int> actions;  // H entries
    SignalTable revealed_rewards;

    bool operator==(const EpisodeRecord&) const = default;
};

struct ValidationReport {
    bool passed = true;
    double max_prob_sum_error = 0.0;
    double min_prob = 0.0;
    double max_prob = 0.0;
    double max_phi_V_norm = 0.0;
    std::vector<double> theta_norms;
    double B = 0.0;
    std::vector<std::string> failures;

    std::string to_string() const;
};

/**
 * Checks the linear mixture invariants: per-(h,s,a) transition sums, entries in
 * [0,1], ||theta*_h|| <= B, ||phi_V|| <= 1 over sampled V in [0,1]^S, reward and
 * constraint ranges, and b in [0,H]. Never throws on a failed invariant.
 */
ValidationReport validate_instance(const CmdpInstance& inst, int num_value_samples,
                                   std::mt19937_64& rng);

}  // namespace pdpowers
