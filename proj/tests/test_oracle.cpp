#include "oracles.hpp"
#include "pdpowers/environment.hpp"
#include "pdpowers/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace pdpowers;

namespace {

PolicyTable constant_action(const CmdpInstance& inst, int a) {
    std::vector<int> acts(std::size_t(inst.horizon * inst.num_states), a);
    return PolicyTable::deterministic(inst.horizon, inst.num_states, inst.num_actions, acts);
}

double geometric(double r, int n) {
    double s = 0.0, p = 1.0;
    for (int i = 0; i < n; ++i, p *= r) s += p;
    return s;
}

}  // namespace

TEST_CASE("dp_evaluate closed forms on the benchmark") {
    auto inst = build_benchmark_instance({});
    SignalTable zero(inst.horizon, inst.num_states, inst.num_actions, 0.0);
    auto res = dp_evaluate(inst, PolicyTable::uniform(inst.horizon, inst.num_states, inst.num_actions), zero);
    for (const auto& layer : res.V)
        for (double v : layer) CHECK(v == 0.0);

    CHECK(policy_value(inst, constant_action(inst, 15), inst.constraint) ==
          doctest::Approx(geometric(0.91, 10)).epsilon(1e-13));
    CHECK(geometric(0.91, 10) == doctest::Approx(6.784265354243252).epsilon(1e-14));
    const auto uniform = PolicyTable::uniform(inst.horizon, inst.num_states, inst.num_actions);
    CHECK(policy_value(inst, uniform, inst.constraint) == doctest::Approx(0.5 * geometric(0.95, 10)).epsilon(1e-13));
    CHECK(policy_value(inst, uniform, inst.constraint) == doctest::Approx(4.01263060761621).epsilon(1e-13));
}

TEST_CASE("dp_evaluate matches enumeration on the tiny instance") {
    auto inst = build_tiny_instance();
    for (int idx : {0, 1, 77, 1234, 4095}) {
        auto acts = oracles::tiny_policy_from_index(idx);
        auto pol = PolicyTable::deterministic(3, 4, 2, acts);
        CHECK(policy_value(inst, pol, inst.reward_table(1)) ==
              doctest::Approx(oracles::tiny_value(acts, 1.0, 0.0)).epsilon(1e-13));
        CHECK(policy_value(inst, pol, inst.constraint) ==
              doctest::Approx(oracles::tiny_value(acts, 0.0, 1.0)).epsilon(1e-13));
    }
}

TEST_CASE("lagrangian_greedy matches exhaustive enumeration on the tiny instance") {
    auto inst = build_tiny_instance();
    auto rbar = averaged_reward(inst, 10);
    for (double lam : {0.0, 0.5, 1.0, 2.0}) {
        double best = -1.0;
        for (int idx = 0; idx < 4096; ++idx)
            best = std::max(best, oracles::tiny_value(oracles::tiny_policy_from_index(idx), 1.0, lam));
        auto pol = lagrangian_greedy(inst, rbar, lam);
        double got = policy_value(inst, pol, rbar) + lam * policy_value(inst, pol, inst.constraint);
        CHECK(got == doctest::Approx(best).epsilon(1e-13));
    }
}

TEST_CASE("lagrangian_greedy extremes on the benchmark") {
    auto inst = build_benchmark_instance({});
    auto rbar = averaged_reward(inst, 2000);
    auto greedy_g = lagrangian_greedy(inst, rbar, 2.0 * inst.horizon / 1e-8);
    for (int h = 0; h < inst.horizon; ++h)
        for (int s = 0; s < inst.horizon; ++s) CHECK(greedy_g(h, s, 15) == 1.0);
    CHECK(max_constraint_value(inst) == doctest::Approx(geometric(0.91, 10)).epsilon(1e-13));
}

TEST_CASE("lagrangian values are monotone in the multiplier") {
    for (bool tiny : {true, false}) {
        auto inst = tiny ? build_tiny_instance() : build_benchmark_instance({});
        auto rbar = averaged_reward(inst, 2000);
        double prev_g = -1.0, prev_r = 1e9;
        for (double lam = 0.0; lam <= 20.0; lam += 0.25) {
            auto pol = lagrangian_greedy(inst, rbar, lam);
            double vg = policy_value(inst, pol, inst.constraint);
            double vr = policy_value(inst, pol, rbar);
            CHECK(vg >= prev_g - 1e-12);
            CHECK(vr <= prev_r + 1e-12);
            prev_g = vg;
            prev_r = vr;
        }
    }
}

TEST_CASE("constrained comparator on the tiny instance") {
    auto inst = build_tiny_instance();
    auto rbar = averaged_reward(inst, 1);
    auto cmp = constrained_comparator(inst, rbar);
    CHECK(cmp.gamma == doctest::Approx(0.7475).epsilon(1e-12));
    CHECK(cmp.value_g >= inst.threshold - 1e-9);
    CHECK(cmp.value_r == doctest::Approx(1.69).epsilon(1e-8));
    CHECK(cmp.weight > 0.0);
    CHECK(cmp.weight < 1.0);
    CHECK(brute_force_comparator(inst, rbar) == doctest::Approx(1.69).epsilon(1e-12));
    CHECK(std::abs(cmp.value_r - brute_force_comparator(inst, rbar)) <= 1e-6);

    // Randomization strictly helps here; best feasible deterministic policy is worth 1.59.
    double best_det = -1.0;
    for (int idx = 0; idx < 4096; ++idx) {
        auto acts = oracles::tiny_policy_from_index(idx);
        if (oracles::tiny_value(acts, 0.0, 1.0) >= inst.threshold)
            best_det = std::max(best_det, oracles::tiny_value(acts, 1.0, 0.0));
    }
    CHECK(best_det == doctest::Approx(1.59).epsilon(1e-12));
    CHECK(cmp.value_r > best_det + 0.05);
}

TEST_CASE("comparator with a slack constraint is the reward-greedy policy") {
    auto inst = build_tiny_instance();
    inst.threshold = 0.0;
    auto rbar = averaged_reward(inst, 1);
    auto cmp = constrained_comparator(inst, rbar);
    CHECK(cmp.lambda_star == 0.0);
    CHECK(cmp.value_r == doctest::Approx(2.2).epsilon(1e-12));
    CHECK(brute_force_comparator(inst, rbar) == doctest::Approx(2.2).epsilon(1e-12));
}

TEST_CASE("comparator on the benchmark") {
    auto inst = build_benchmark_instance({});
    auto cmp = constrained_comparator(inst, averaged_reward(inst, 2000));
    CHECK(cmp.gamma == doctest::Approx(geometric(0.91, 10) - 6.0).epsilon(1e-12));
    CHECK(cmp.value_g >= inst.threshold - 1e-9);
    CHECK(cmp.value_g <= max_constraint_value(inst) + 1e-12);
}

TEST_CASE("comparator rejects infeasible thresholds") {
    auto inst = build_tiny_instance();
    inst.threshold = 2.9;
    CHECK_THROWS_AS(constrained_comparator(inst, averaged_reward(inst, 1)), std::runtime_error);
}

TEST_CASE("brute force refuses large instances") {
    auto inst = build_benchmark_instance({});
    CHECK_THROWS(brute_force_comparator(inst, averaged_reward(inst, 1)));
}

TEST_CASE("regret and violation curves") {
    std::vector<double> star = {1.0, 2.0, 1.5}, pol = {1.0, 2.0, 1.5};
    std::vector<double> g = {3.0, 3.0, 3.0};
    auto c = metrics(star, pol, g, 3.0);
    for (double r : c.regret) CHECK(r == 0.0);
    for (double v : c.violation) CHECK(v == 0.0);

    std::vector<double> g2 = {1.0, 4.0, 5.0};
    std::vector<double> pol2 = {0.5, 2.0, 1.0};
    auto c2 = metrics(star, pol2, g2, 3.0);
    CHECK(c2.regret == std::vector<double>{0.5, 0.5, 1.0});
    // Positive part of the running sum 2, 1, -1.
    CHECK(c2.violation == std::vector<double>{2.0, 1.0, 0.0});
}

TEST_CASE("uniform policy violation per episode") {
    auto inst = build_benchmark_instance({});
    double vg = policy_value(inst, PolicyTable::uniform(inst.horizon, inst.num_states, inst.num_actions),
                             inst.constraint);
    CHECK(inst.threshold - vg == doctest::Approx(6.0 - 0.5 * geometric(0.95, 10)).epsilon(1e-13));
    CHECK(std::abs(inst.threshold - vg - 1.987) < 1e-3);
}
