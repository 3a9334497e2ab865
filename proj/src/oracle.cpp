#include "pdpowers/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pdpowers {

namespace {

/// sum_{s'} P_h(s'|s,a) V(s').
double expected_next(const CmdpInstance& inst, int h, int s, int a, const std::vector<double>& V) {
    double out = 0.0;
    const Vec& th = inst.theta_star[std::size_t(h)];
    for (const auto& e : inst.features.support(s, a)) out += e.phi.dot(th) * V[std::size_t(e.next_state)];
    return out;
}

void check_signal(const CmdpInstance& inst, const SignalTable& signal) {
    if (signal.horizon() != inst.horizon || signal.num_states() != inst.num_states ||
        signal.num_actions() != inst.num_actions)
        throw std::invalid_argument("signal table shape does not match the instance");
}

}  // namespace

DpResult dp_evaluate(const CmdpInstance& inst, const PolicyTable& policy, const SignalTable& signal) {
    check_signal(inst, signal);
    const int H = inst.horizon, S = inst.num_states, A = inst.num_actions;
    DpResult out;
    out.V.assign(std::size_t(H) + 1, std::vector<double>(std::size_t(S), 0.0));
    out.Q = StepTable(H, S, A);
    for (int h = H - 1; h >= 0; --h)
        for (int s = 0; s < S; ++s) {
            double v = 0.0;
            for (int a = 0; a < A; ++a) {
                double q = signal(h, s, a) + expected_next(inst, h, s, a, out.V[std::size_t(h) + 1]);
                out.Q(h, s, a) = q;
                v += policy(h, s, a) * q;
            }
            out.V[std::size_t(h)][std::size_t(s)] = v;
        }
    return out;
}

double policy_value(const CmdpInstance& inst, const PolicyTable& policy, const SignalTable& signal) {
    return dp_evaluate(inst, policy, signal).value(inst.initial_state);
}

SignalTable averaged_reward(const CmdpInstance& inst, long K) {
    if (K < 1) throw std::invalid_argument("averaged_reward: K must be >= 1");
    SignalTable avg(inst.horizon, inst.num_states, inst.num_actions);
    for (long k = 1; k <= K; ++k) {
        SignalTable r = inst.reward_table(k);
        for (std::size_t i = 0; i < avg.data().size(); ++i) avg.data()[i] += r.data()[i];
    }
    for (double& x : avg.data()) x /= double(K);
    return avg;
}

PolicyTable lagrangian_greedy(const CmdpInstance& inst, const SignalTable& reward, double lam) {
    if (!(lam >= 0.0)) throw std::invalid_argument("lagrangian_greedy: lam must be >= 0");
    check_signal(inst, reward);
    const int H = inst.horizon, S = inst.num_states, A = inst.num_actions;
    std::vector<double> next(std::size_t(S), 0.0);
    std::vector<double> cur(next.size(), 0.0);
    std::vector<int> actions(std::size_t(H) * S);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            int best_a = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                double q = reward(h, s, a) + lam * inst.constraint(h, s, a) + expected_next(inst, h, s, a, next);
                // Relative tolerance so rounding noise never overturns the lowest-index tie-break.
                if (a == 0 || q > best + 1e-12 * std::max(1.0, std::abs(best))) {
                    best = q;
                    best_a = a;
                }
            }
            cur[std::size_t(s)] = best;
            actions[std::size_t(h) * S + s] = best_a;
        }
        std::swap(cur, next);
    }
    return PolicyTable::deterministic(H, S, A, actions);
}

double max_constraint_value(const CmdpInstance& inst) {
    SignalTable zero(inst.horizon, inst.num_states, inst.num_actions);
    PolicyTable pi = lagrangian_greedy(inst, zero, 1.0);
    return policy_value(inst, pi, inst.constraint);
}

double ComparatorResult::value_under(const CmdpInstance& inst, const SignalTable& signal) const {
    double hi = policy_value(inst, policy_hi, signal);
    if (weight >= 1.0) return hi;
    return weight * hi + (1.0 - weight) * policy_value(inst, policy_lo, signal);
}

ComparatorResult constrained_comparator(const CmdpInstance& inst, const SignalTable& reward, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("constrained_comparator: tol must be positive");
    const double b = inst.threshold;

    ComparatorResult out;
    out.gamma = max_constraint_value(inst) - b;
    if (out.gamma < -tol)
        throw std::runtime_error(
            fmt::format("constrained_comparator: infeasible, max V^g = {} < b = {}", out.gamma + b, b));

    struct Point {
        PolicyTable pi;
        double vr, vg;
    };
    auto eval = [&](double lam) {
        PolicyTable pi = lagrangian_greedy(inst, reward, lam);
        double vr = policy_value(inst, pi, reward);
        double vg = policy_value(inst, pi, inst.constraint);
        return Point{std::move(pi), vr, vg};
    };
    auto finish_pure = [&](Point p, double lam) {
        out.policy_lo = p.pi;
        out.policy_hi = std::move(p.pi);
        out.weight = 1.0;
        out.value_r = p.vr;
        out.value_g = p.vg;
        out.lambda_star = lam;
        return out;
    };

    Point lo = eval(0.0);
    if (lo.vg >= b) return finish_pure(std::move(lo), 0.0);

    const double lam_max = 2.0 * inst.horizon / tol;
    double lam_lo = 0.0, lam_hi = 1.0;
    Point hi = eval(lam_hi);
    while (hi.vg < b) {
        if (lam_hi >= lam_max) {
            if (hi.vg >= b - tol) return finish_pure(std::move(hi), lam_hi);
            throw std::runtime_error("constrained_comparator: no feasible multiplier below 2H/tol");
        }
        lam_lo = lam_hi;
        lo = std::move(hi);
        lam_hi = std::min(2.0 * lam_hi, lam_max);
        hi = eval(lam_hi);
    }

    for (int it = 0; it < 200 && lam_hi - lam_lo > 1e-13 * std::max(1.0, lam_hi); ++it) {
        double mid = 0.5 * (lam_lo + lam_hi);
        Point p = eval(mid);
        if (std::abs(p.vg - b) <= tol && p.vg >= b) return finish_pure(std::move(p), mid);
        if (p.vg >= b) {
            lam_hi = mid;
            hi = std::move(p);
        } else {
            lam_lo = mid;
            lo = std::move(p);
        }
    }

    const double w = (b - lo.vg) / (hi.vg - lo.vg);
    out.weight = std::clamp(w, 0.0, 1.0);
    out.value_r = out.weight * hi.vr + (1.0 - out.weight) * lo.vr;
    out.value_g = out.weight * hi.vg + (1.0 - out.weight) * lo.vg;
    out.lambda_star = 0.5 * (lam_lo + lam_hi);
    out.policy_lo = std::move(lo.pi);
    out.policy_hi = std::move(hi.pi);
    return out;
}

double brute_force_comparator(const CmdpInstance& inst, const SignalTable& reward) {
    const int H = inst.horizon, S = inst.num_states, A = inst.num_actions;
    const int slots = H * S;
    double count = std::pow(double(A), double(slots));
    if (count > 1e5)
        throw std::invalid_argument(fmt::format("brute_force_comparator: {} policies exceed 1e5", count));
    const double b = inst.threshold;

    std::vector<double> feas_r, feas_g, infeas_r, infeas_g;
    std::vector<int> actions(std::size_t(slots), 0);
    for (long idx = 0; idx < long(count); ++idx) {
        long rem = idx;
        for (int i = 0; i < slots; ++i) {
            actions[std::size_t(i)] = int(rem % A);
            rem /= A;
        }
        PolicyTable pi = PolicyTable::deterministic(H, S, A, actions);
        double vr = policy_value(inst, pi, reward);
        double vg = policy_value(inst, pi, inst.constraint);
        if (vg >= b) {
            feas_r.push_back(vr);
            feas_g.push_back(vg);
        } else {
            infeas_r.push_back(vr);
            infeas_g.push_back(vg);
        }
    }
    if (feas_r.empty()) throw std::runtime_error("brute_force_comparator: no feasible policy");

    double best = *std::max_element(feas_r.begin(), feas_r.end());
    // Values are affine in the mixing weight, so the best feasible mixture of an
    // infeasible and a feasible policy puts the constraint exactly at b.
    for (std::size_t i = 0; i < infeas_r.size(); ++i)
        for (std::size_t j = 0; j < feas_r.size(); ++j) {
            double w = (b - infeas_g[i]) / (feas_g[j] - infeas_g[i]);
            best = std::max(best, w * feas_r[j] + (1.0 - w) * infeas_r[i]);
        }
    return best;
}

RegretCurves metrics(std::span<const double> comparator_r, std::span<const double> policy_r,
                     std::span<const double> policy_g, double b) {
    if (comparator_r.size() != policy_r.size() || policy_r.size() != policy_g.size())
        throw std::invalid_argument("metrics: series lengths differ");
    RegretCurves out;
    out.regret.reserve(policy_r.size());
    out.violation.reserve(policy_r.size());
    double regret = 0.0, gap = 0.0;
    for (std::size_t i = 0; i < policy_r.size(); ++i) {
        regret += comparator_r[i] - policy_r[i];
        gap += b - policy_g[i];
        out.regret.push_back(regret);
        out.violation.push_back(std::max(0.0, gap));
    }
    return out;
}

}  // namespace pdpowers
