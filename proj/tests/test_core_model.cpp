#include "oracles.hpp"
#include "pdpowers/environment.hpp"

#include <doctest.h>

#include <random>

using namespace pdpowers;

namespace {

int all_ones(int d) { return (1 << (d - 1)) - 1; }

}  // namespace

TEST_CASE("phi_V of the zero function is zero") {
    auto inst = build_benchmark_instance({});
    std::vector<double> V(std::size_t(inst.num_states), 0.0);
    for (int a : {0, 5, 15}) CHECK(inst.features.phi_V(V, 0, a).norm() == 0.0);
}

TEST_CASE("phi_V of the constant one integrates transitions to one") {
    auto inst = build_benchmark_instance({});
    std::vector<double> V(std::size_t(inst.num_states), 1.0);
    for (int h = 0; h < inst.horizon; ++h)
        for (int s : {0, 3, inst.horizon, inst.horizon + 1})
            CHECK(inst.features.phi_V(V, s, all_ones(5)).dot(inst.theta_star[std::size_t(h)]) ==
                  doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("phi_V of an indicator picks a single feature vector") {
    auto inst = build_benchmark_instance({});
    std::vector<double> V(std::size_t(inst.num_states), 0.0);
    V[1] = 1.0;
    Vec got = inst.features.phi_V(V, 0, 7);
    CHECK((got - inst.features.phi(1, 0, 7)).norm() == 0.0);
}

TEST_CASE("phi_V is linear in V") {
    auto inst = build_tiny_instance();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> V1(4), V2(4), mix(4);
        for (int s = 0; s < 4; ++s) {
            V1[std::size_t(s)] = u(rng);
            V2[std::size_t(s)] = u(rng);
            mix[std::size_t(s)] = 0.3 * V1[std::size_t(s)] - 1.7 * V2[std::size_t(s)];
        }
        for (int s = 0; s < 4; ++s)
            for (int a = 0; a < 2; ++a) {
                Vec lhs = inst.features.phi_V(mix, s, a);
                Vec rhs = 0.3 * inst.features.phi_V(V1, s, a) - 1.7 * inst.features.phi_V(V2, s, a);
                CHECK((lhs - rhs).norm() < 1e-14);
            }
    }
}

TEST_CASE("tiny instance transitions match the closed form kernel") {
    auto inst = build_tiny_instance();
    for (int h = 0; h < 3; ++h)
        for (int s = 0; s < 4; ++s)
            for (int a = 0; a < 2; ++a)
                for (int n = 0; n < 4; ++n)
                    CHECK(transition_prob(inst, h, s, a, n) ==
                          doctest::Approx(oracles::tiny_P(h, s, a, n)).epsilon(1e-14));
}

TEST_CASE("benchmark transition probabilities") {
    auto inst = build_benchmark_instance({});
    const int H = inst.horizon;
    CHECK(transition_prob(inst, 0, 0, all_ones(5), 1) == doctest::Approx(0.91).epsilon(1e-14));
    CHECK(transition_prob(inst, 0, 0, 0, 1) == doctest::Approx(0.99).epsilon(1e-14));
    CHECK(transition_prob(inst, 0, 0, 0, H + 1) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(transition_prob(inst, 4, H, 3, H) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(transition_prob(inst, 4, H + 1, 3, H + 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(transition_prob(inst, 0, 0, 0, 5) == 0.0);
    // Every sign pattern against the closed form.
    for (int a = 0; a < inst.num_actions; ++a) {
        int sum = 0;
        for (int v : sign_action(a, 5)) sum += v;
        CHECK(transition_prob(inst, 2, 3, a, 4) == doctest::Approx(oracles::bench_advance(sum)).epsilon(1e-13));
    }
}

TEST_CASE("reward_at rejects out-of-range indices") {
    auto inst = build_tiny_instance();
    CHECK_THROWS(reward_at(inst, 1, 3, 0, 0));
    CHECK_THROWS(reward_at(inst, 1, 0, 4, 0));
    CHECK_THROWS(reward_at(inst, 0, 0, 0, 0));
    CHECK(reward_at(inst, 7, 1, 3, 0) == 1.0);
}

TEST_CASE("validate_instance passes on the benchmark construction") {
    auto inst = build_benchmark_instance({});
    std::mt19937_64 rng(11);
    auto rep = validate_instance(inst, 1000, rng);
    CHECK(rep.passed);
    CHECK(rep.max_prob_sum_error <= 1e-12);
    CHECK(rep.max_phi_V_norm <= 1.0);
    for (double n : rep.theta_norms) CHECK(n <= 3.0);
}

TEST_CASE("validate_instance reports a doubled theta*") {
    auto inst = build_benchmark_instance({});
    for (auto& t : inst.theta_star) t *= 2.0;
    std::mt19937_64 rng(11);
    auto rep = validate_instance(inst, 100, rng);
    CHECK_FALSE(rep.passed);
    CHECK(rep.max_prob_sum_error == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("validate_instance reports a threshold above H") {
    auto inst = build_benchmark_instance({});
    inst.threshold = inst.horizon + 1;
    std::mt19937_64 rng(11);
    auto rep = validate_instance(inst, 100, rng);
    CHECK_FALSE(rep.passed);
    bool named = false;
    for (const auto& f : rep.failures) named |= f.find("threshold") != std::string::npos;
    CHECK(named);
}

TEST_CASE("policy tables") {
    auto u = PolicyTable::uniform(2, 3, 4);
    CHECK(u.max_simplex_error() < 1e-15);
    CHECK(u(1, 2, 3) == 0.25);
    std::vector<int> acts = {0, 1, 2, 3, 3, 3};
    auto det = PolicyTable::deterministic(2, 3, 4, acts);
    CHECK(det(0, 1, 1) == 1.0);
    CHECK(det(0, 1, 0) == 0.0);
    CHECK(det(1, 2, 3) == 1.0);
    det(0, 0, 0) = -0.1;
    CHECK(det.max_simplex_error() == std::numeric_limits<double>::infinity());
}
