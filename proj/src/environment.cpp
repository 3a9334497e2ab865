#include "pdpowers/environment.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace pdpowers {

void BenchmarkParams::validate() const {
    auto bad = [](const char* field, const std::string& why) {
        throw std::invalid_argument(fmt::format("BenchmarkParams.{}: {}", field, why));
    };
    if (H < 1) bad("H", "must be >= 1");
    if (d < 2) bad("d", "must be >= 2");
    if (d > 21) bad("d", "at most 2^20 actions are supported");
    if (block_length < 1) bad("block_length", "must be >= 1");
    if (!(b >= 0.0 && b <= H)) bad("b", "must lie in [0, H]");
    if (!(p0 - slope * (d - 1) > 0.0 && p0 + slope * (d - 1) < 1.0))
        bad("p0", "p0 -/+ slope*(d-1) must stay inside (0,1)");
    if (!(reward_scale >= 0.0 && reward_scale <= 1.0)) bad("reward_scale", "must lie in [0,1]");
    if (!(feature_scale > 0.0)) bad("feature_scale", "must be positive");
    if (!(B > 0.0)) bad("B", "must be positive");
}

std::vector<int> sign_action(int a, int d) {
    std::vector<int> out(std::size_t(d - 1));
    for (int j = 0; j < d - 1; ++j) out[std::size_t(j)] = ((a >> (d - 2 - j)) & 1) ? 1 : -1;
    return out;
}

double plus_fraction(int a, int d) {
    double sum = 0.0;
    for (int x : sign_action(a, d)) sum += x + 1;
    return sum / (2.0 * (d - 1));
}

CmdpInstance build_benchmark_instance(const BenchmarkParams& p) {
    p.validate();
    const int H = p.H, d = p.d;
    const int S = H + 2;
    const int A = 1 << (d - 1);
    const int fail_state = H + 1;
    const double c = p.feature_scale;

    CmdpInstance inst;
    inst.name = "benchmark";
    inst.num_states = S;
    inst.num_actions = A;
    inst.horizon = H;
    inst.B = p.B;
    inst.threshold = p.b;
    inst.initial_state = 0;

    Vec theta(d);
    theta(0) = p.p0;
    theta.tail(d - 1).setConstant(-p.slope);
    theta *= c;
    inst.theta_star.assign(std::size_t(H), theta);

    inst.features = FeatureMap(d, S, A);
    const Vec absorb = theta / theta.squaredNorm();
    for (int a = 0; a < A; ++a) {
        auto signs = sign_action(a, d);
        Vec advance(d), fall(d);
        advance(0) = 1.0;
        fall(0) = (1.0 - p.p0) / p.p0;
        for (int j = 0; j < d - 1; ++j) {
            advance(j + 1) = signs[std::size_t(j)];
            fall(j + 1) = -signs[std::size_t(j)];
        }
        advance /= c;
        fall /= c;
        for (int s = 0; s < H; ++s) {
            inst.features.add(s, a, s + 1, advance);
            inst.features.add(s, a, fail_state, fall);
        }
        inst.features.add(H, a, H, absorb);
        inst.features.add(fail_state, a, fail_state, absorb);
    }

    inst.constraint = SignalTable(H, S, A, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < H; ++s)
            for (int a = 0; a < A; ++a) inst.constraint(h, s, a) = plus_fraction(a, d);

    inst.reward = [H, d, fail_state, block = p.block_length, scale = p.reward_scale](
                      long k, int /*h*/, int s, int a) -> double {
        if (s == fail_state) return 1.0;
        if (s >= H) return 0.0;
        double frac = plus_fraction(a, d);
        bool even_block = (k / block) % 2 == 0;
        return even_block ? scale * frac : scale * (1.0 - frac);
    };

    std::mt19937_64 check_rng(0x5eed);
    ValidationReport rep = validate_instance(inst, 1000, check_rng);
    if (!rep.passed) throw std::runtime_error("benchmark instance invalid:\n" + rep.to_string());
    return inst;
}

CmdpInstance build_tiny_instance() {
    constexpr int H = 3, S = 4, A = 2, d = 2;
    const double root2 = std::sqrt(2.0);

    CmdpInstance inst;
    inst.name = "tiny";
    inst.num_states = S;
    inst.num_actions = A;
    inst.horizon = H;
    inst.B = 3.0;
    inst.threshold = 1.5;
    inst.initial_state = 0;

    // P_h = w_h * P1 + (1 - w_h) * P2 with two fixed component kernels.
    const double mix[H] = {0.7, 0.5, 0.2};
    for (double w : mix) inst.theta_star.push_back(root2 * Vec{{w, 1.0 - w}});

    inst.features = FeatureMap(d, S, A);
    const Vec e1 = Vec{{1.0, 0.0}} / root2;
    const Vec e2 = Vec{{0.0, 1.0}} / root2;
    for (int s = 0; s < S; ++s) {
        inst.features.add(s, 0, (s + 1) % S, e1);
        inst.features.add(s, 0, s, e2);
        inst.features.add(s, 1, s, 0.5 * e1);
        inst.features.add(s, 1, (s + 2) % S, 0.5 * e1);
        inst.features.add(s, 1, (s + 3) % S, e2);
    }

    static constexpr double kReward[S][A] = {{0.9, 0.2}, {0.6, 0.1}, {0.3, 0.5}, {1.0, 0.0}};
    static constexpr double kConstraint[S][A] = {{0.1, 0.8}, {0.2, 0.9}, {0.0, 0.7}, {0.3, 0.6}};
    inst.constraint = SignalTable(H, S, A);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) inst.constraint(h, s, a) = kConstraint[s][a];
    inst.reward = [](long, int, int s, int a) { return kReward[s][a]; };

    std::mt19937_64 check_rng(0x7179);
    ValidationReport rep = validate_instance(inst, 1000, check_rng);
    if (!rep.passed) throw std::runtime_error("tiny instance invalid:\n" + rep.to_string());
    return inst;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

double RngStream::uniform(long k, int h, std::uint64_t draw) const {
    std::uint64_t x = splitmix64(seed_);
    x = splitmix64(x ^ std::uint64_t(k));
    x = splitmix64(x ^ std::uint64_t(h));
    x = splitmix64(x ^ draw);
    return double(x >> 11) * 0x1.0p-53;
}

int sample_index(std::span<const double> probs, double u) {
    double cum = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last = int(i);
        cum += probs[i];
        if (u < cum) return last;
    }
    if (last < 0) throw std::runtime_error("sample_index: distribution has no mass");
    return last;
}

EpisodeRecord rollout(const CmdpInstance& inst, const PolicyTable& policy, long k,
                      const RngStream& rng) {
    const int H = inst.horizon;
    EpisodeRecord ep;
    ep.k = k;
    ep.states.reserve(std::size_t(H) + 1);
    ep.actions.reserve(std::size_t(H));
    int s = inst.initial_state;
    ep.states.push_back(s);
    std::vector<double> next_probs;
    std::vector<int> next_states;
    for (int h = 0; h < H; ++h) {
        int a = sample_index(policy.row(h, s), rng.uniform(k, h, 0));
        const auto& sup = inst.features.support(s, a);
        next_probs.clear();
        next_states.clear();
        double mass = 0.0;
        for (const auto& e : sup) {
            double p = e.phi.dot(inst.theta_star[std::size_t(h)]);
            next_probs.push_back(p);
            next_states.push_back(e.next_state);
            mass += p;
        }
        if (std::abs(mass - 1.0) > 1e-9)
            throw std::runtime_error(
                fmt::format("rollout: transition mass {} at (h={}, s={}, a={})", mass, h + 1, s, a));
        s = next_states[std::size_t(sample_index(next_probs, rng.uniform(k, h, 1)))];
        ep.actions.push_back(a);
        ep.states.push_back(s);
    }
    ep.revealed_rewards = inst.reward_table(k);
    return ep;
}

}  // namespace pdpowers
