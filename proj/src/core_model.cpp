#include "pdpowers/core_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pdpowers {

FeatureMap::FeatureMap(int dim, int num_states, int num_actions)
    : dim_(dim), num_states_(num_states), num_actions_(num_actions) {
    if (dim < 1 || num_states < 1 || num_actions < 1)
        throw std::invalid_argument("FeatureMap: dimensions must be positive");
    support_.resize(std::size_t(num_states) * num_actions);
}

void FeatureMap::check_pair(int s, int a) const {
    if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
        throw std::out_of_range(fmt::format("FeatureMap: (s={}, a={}) out of range", s, a));
}

void FeatureMap::add(int s, int a, int next, const Vec& phi) {
    check_pair(s, a);
    if (next < 0 || next >= num_states_)
        throw std::out_of_range(fmt::format("FeatureMap: next state {} out of range", next));
    if (phi.size() != dim_) throw std::invalid_argument("FeatureMap: feature has wrong dimension");
    auto& entries = support_[std::size_t(s) * num_actions_ + a];
    for (auto& e : entries) {
        if (e.next_state == next) {
            e.phi += phi;
            return;
        }
    }
    entries.push_back({next, phi});
}

const std::vector<SupportEntry>& FeatureMap::support(int s, int a) const {
    check_pair(s, a);
    return support_[std::size_t(s) * num_actions_ + a];
}

Vec FeatureMap::phi(int next, int s, int a) const {
    for (const auto& e : support(s, a))
        if (e.next_state == next) return e.phi;
    return Vec::Zero(dim_);
}

Vec FeatureMap::phi_V(std::span<const double> V, int s, int a) const {
    if (V.size() != std::size_t(num_states_))
        throw std::invalid_argument("phi_V: value vector must have one entry per state");
    Vec out = Vec::Zero(dim_);
    for (const auto& e : support(s, a)) out.noalias() += V[std::size_t(e.next_state)] * e.phi;
    return out;
}

void FeatureMap::check_complete() const {
    for (int s = 0; s < num_states_; ++s)
        for (int a = 0; a < num_actions_; ++a)
            if (support(s, a).empty())
                throw std::invalid_argument(fmt::format("FeatureMap: empty support at (s={}, a={})", s, a));
}

SignalTable CmdpInstance::reward_table(long k) const {
    SignalTable table(horizon, num_states, num_actions);
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < num_states; ++s)
            for (int a = 0; a < num_actions; ++a) table(h, s, a) = reward(k, h, s, a);
    return table;
}

double transition_prob(const CmdpInstance& inst, int h, int s, int a, int next) {
    if (h < 0 || h >= inst.horizon) throw std::out_of_range("transition_prob: step out of range");
    return inst.features.phi(next, s, a).dot(inst.theta_star[std::size_t(h)]);
}

double reward_at(const CmdpInstance& inst, long k, int h, int s, int a) {
    if (k < 1 || h < 0 || h >= inst.horizon || s < 0 || s >= inst.num_states || a < 0 ||
        a >= inst.num_actions)
        throw std::out_of_range(fmt::format("reward_at: (k={}, h={}, s={}, a={}) out of range", k, h, s, a));
    return inst.reward(k, h, s, a);
}

PolicyTable PolicyTable::uniform(int H, int S, int A) {
    PolicyTable p(H, S, A);
    for (double& x : p.probs_.data()) x = 1.0 / A;
    return p;
}

PolicyTable PolicyTable::deterministic(int H, int S, int A, std::span<const int> actions) {
    if (actions.size() != std::size_t(H) * S)
        throw std::invalid_argument("PolicyTable::deterministic: need one action per (h,s)");
    PolicyTable p(H, S, A);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            int a = actions[std::size_t(h) * S + s];
            if (a < 0 || a >= A) throw std::out_of_range("PolicyTable::deterministic: bad action");
            p(h, s, a) = 1.0;
        }
    return p;
}

double PolicyTable::max_simplex_error() const {
    double worst = 0.0;
    for (int h = 0; h < horizon(); ++h)
        for (int s = 0; s < num_states(); ++s) {
            double sum = 0.0;
            for (double p : row(h, s)) {
                if (!(p >= 0.0)) return std::numeric_limits<double>::infinity();
                sum += p;
            }
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    return worst;
}

std::string ValidationReport::to_string() const {
    std::string out = fmt::format(
        "validation: {}\n  max |sum_s' P - 1| = {:.3e}\n  P range = [{:.6g}, {:.6g}]\n"
        "  max sampled ||phi_V||_2 = {:.6g}\n  B = {:.6g}\n",
        passed ? "PASS" : "FAIL", max_prob_sum_error, min_prob, max_prob, max_phi_V_norm, B);
    for (std::size_t h = 0; h < theta_norms.size(); ++h)
        out += fmt::format("  ||theta*_{}||_2 = {:.6g}\n", h + 1, theta_norms[h]);
    for (const auto& f : failures) out += "  failure: " + f + "\n";
    return out;
}

ValidationReport validate_instance(const CmdpInstance& inst, int num_value_samples,
                                   std::mt19937_64& rng) {
    constexpr double kProbTol = 1e-12;
    constexpr double kNormTol = 1e-12;
    ValidationReport rep;
    rep.B = inst.B;
    rep.min_prob = std::numeric_limits<double>::infinity();
    rep.max_prob = -std::numeric_limits<double>::infinity();
    auto fail = [&rep](std::string msg) {
        rep.passed = false;
        if (rep.failures.size() < 32) rep.failures.push_back(std::move(msg));
    };

    const int H = inst.horizon, S = inst.num_states, A = inst.num_actions;
    if (H < 1 || S < 1 || A < 1) {
        fail("nonpositive dimensions");
        return rep;
    }
    if (inst.features.num_states() != S || inst.features.num_actions() != A)
        fail("feature map dimensions do not match the instance");
    if (int(inst.theta_star.size()) != H) {
        fail("theta_star must have one vector per step");
        return rep;
    }
    if (inst.initial_state < 0 || inst.initial_state >= S) fail("initial state out of range");
    if (!(inst.threshold >= 0.0 && inst.threshold <= H))
        fail(fmt::format("threshold b = {} outside [0, H = {}]", inst.threshold, H));
    if (!(inst.B > 0.0)) fail("B must be positive");

    for (int h = 0; h < H; ++h) {
        const Vec& th = inst.theta_star[std::size_t(h)];
        if (th.size() != inst.features.dim()) {
            fail(fmt::format("theta*_{} has wrong dimension", h + 1));
            return rep;
        }
        double n = th.norm();
        rep.theta_norms.push_back(n);
        if (n > inst.B + kNormTol) fail(fmt::format("||theta*_{}|| = {} exceeds B = {}", h + 1, n, inst.B));
    }

    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const auto& sup = inst.features.support(s, a);
            if (sup.empty()) {
                fail(fmt::format("empty support at (s={}, a={})", s, a));
                continue;
            }
            for (int h = 0; h < H; ++h) {
                double sum = 0.0;
                for (const auto& e : sup) {
                    double p = e.phi.dot(inst.theta_star[std::size_t(h)]);
                    rep.min_prob = std::min(rep.min_prob, p);
                    rep.max_prob = std::max(rep.max_prob, p);
                    if (p < -kProbTol || p > 1.0 + kProbTol)
                        fail(fmt::format("P_{}({}|{},{}) = {} outside [0,1]", h + 1, e.next_state, s, a, p));
                    sum += p;
                }
                double err = std::abs(sum - 1.0);
                rep.max_prob_sum_error = std::max(rep.max_prob_sum_error, err);
                if (err > kProbTol)
                    fail(fmt::format("transition mass at (h={}, s={}, a={}) sums to {}", h + 1, s, a, sum));
            }
        }

    // ||phi_V|| is convex in V, so the all-ones vector is checked alongside the samples.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> V(std::size_t(S), 1.0);
    for (int i = 0; i <= num_value_samples; ++i) {
        if (i > 0)
            for (double& v : V) v = unif(rng);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                rep.max_phi_V_norm = std::max(rep.max_phi_V_norm, inst.features.phi_V(V, s, a).norm());
    }
    if (rep.max_phi_V_norm > 1.0 + kNormTol)
        fail(fmt::format("sampled ||phi_V||_2 = {} exceeds 1", rep.max_phi_V_norm));

    if (inst.constraint.horizon() != H || inst.constraint.num_states() != S ||
        inst.constraint.num_actions() != A) {
        fail("constraint table has wrong shape");
        return rep;
    }
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double g = inst.constraint(h, s, a);
                if (!(g >= 0.0 && g <= 1.0)) fail(fmt::format("g_{}({},{}) = {} outside [0,1]", h + 1, s, a, g));
            }
    if (inst.reward) {
        // The schedule is unbounded in k; the first 64 episodes are sampled.
        for (long k = 1; k <= 64; ++k)
            for (int h = 0; h < H; ++h)
                for (int s = 0; s < S; ++s)
                    for (int a = 0; a < A; ++a) {
                        double r = inst.reward(k, h, s, a);
                        if (!(r >= 0.0 && r <= 1.0))
                            fail(fmt::format("r_{}^{}({},{}) = {} outside [0,1]", h + 1, k, s, a, r));
                    }
    } else {
        fail("missing reward schedule");
    }
    if (rep.min_prob > rep.max_prob) rep.min_prob = rep.max_prob = 0.0;
    return rep;
}

}  // namespace pdpowers
