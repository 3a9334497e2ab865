// Acceptance checks for the benchmark reproduction. Prints one PASS/FAIL line
// per criterion; `--criterion N` (repeatable) selects a subset.

#include "pdpowers/harness.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>

using namespace pdpowers;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double geometric(double r, int n) {
    double s = 0.0, p = 1.0;
    for (int i = 0; i < n; ++i, p *= r) s += p;
    return s;
}

RunConfig default_config(const fs::path& out) {
    RunConfig cfg = parse_config("");
    cfg.out_dir = out;
    return cfg;
}

// The default five-seed experiment, run at most once per process.
const ExperimentResult& default_run() {
    static std::unique_ptr<ExperimentResult> res;
    if (!res) res = std::make_unique<ExperimentResult>(run_experiment(default_config("acceptance_default"),
                                                                      seed_offset_from_env()));
    return *res;
}

double at(const AggregateSeries& agg, const char* metric, long k) {
    return agg.mean[agg.column(metric)][std::size_t(k - 1)];
}

// Either the average per-episode value halves, or the second-half increment is below 0.7x the first.
bool sublinear(double half, double full, long K, std::string& why) {
    const double ratio = (full / K) / (half / (K / 2.0));
    const double inc1 = half, inc2 = full - half;
    why += fmt::format("avg-ratio={:.4f} inc-ratio={:.4f}", ratio, inc1 > 0 ? inc2 / inc1 : 0.0);
    return ratio < 0.5 || inc2 < 0.7 * inc1;
}

Outcome criterion1() {
    const auto& res = default_run();
    const long K = long(res.aggregate_pd_powers.rows());
    const long half = K / 2;
    Outcome o;
    std::string reg = "regret ", viol = "violation ";
    const bool r_ok = sublinear(at(res.aggregate_pd_powers, "regret", half), at(res.aggregate_pd_powers, "regret", K),
                                K, reg);
    const bool v_ok = sublinear(at(res.aggregate_pd_powers, "violation", half),
                                at(res.aggregate_pd_powers, "violation", K), K, viol);
    const double b1 = at(res.aggregate_random, "violation", half);
    const double b2 = at(res.aggregate_random, "violation", K) - b1;
    const bool base_ok = std::abs(b2 - b1) <= 0.05 * b1;
    o.pass = r_ok && v_ok && base_ok;
    o.detail = fmt::format("pd-powers {} [{}], {} [{}]; baseline violation increments {:.2f}/{:.2f} [{}]; "
                           "final regret {:.2f} vs baseline {:.2f}",
                           reg, r_ok ? "ok" : "linear", viol, v_ok ? "ok" : "linear", b1, b2,
                           base_ok ? "affine" : "not affine", at(res.aggregate_pd_powers, "regret", K),
                           at(res.aggregate_random, "regret", K));
    return o;
}

Outcome criterion2() {
    const CmdpInstance inst = build_benchmark_instance({});
    const long K = 2000;
    const auto cmp = constrained_comparator(inst, averaged_reward(inst, K));
    const auto run = run_random_baseline(inst, K, RngStream(1), cmp);
    const double closed = inst.threshold - 0.5 * geometric(0.95, inst.horizon);
    double worst = 0.0;
    for (const auto& r : run.series.rows) worst = std::max(worst, std::abs((inst.threshold - r.V_true_g) - closed));
    const double final_v = run.series.rows.back().violation;
    Outcome o;
    o.pass = worst <= 1e-3 && std::abs(closed - 1.987) <= 1e-3 && std::abs(final_v - K * closed) <= 1e-6 * K;
    o.detail = fmt::format("per-episode {:.6f} (closed form {:.6f}, max gap {:.2e}); cumulative at K={}: {:.3f}",
                           inst.threshold - run.series.rows.front().V_true_g, closed, worst, K, final_v);
    return o;
}

Outcome criterion3() {
    const CmdpInstance inst = build_benchmark_instance({});
    const auto cmp = constrained_comparator(inst, averaged_reward(inst, 2000));
    const double closed = geometric(0.91, inst.horizon) - inst.threshold;
    Outcome o;
    o.pass = cmp.gamma >= 0.75 && cmp.gamma <= 0.82 && std::abs(cmp.gamma - closed) <= 1e-9;
    o.detail = fmt::format("gamma = {:.9f}, closed form {:.9f}", cmp.gamma, closed);
    return o;
}

Outcome criterion4() {
    const auto& res = default_run();
    Outcome o;
    o.pass = true;
    long total = 0;
    for (std::size_t i = 0; i < res.seeds.size(); ++i) {
        const auto& d = res.pd_powers[i].diagnostics;
        const std::pair<const char*, const CheckCounter*> counters[] = {
            {"variance bound", &d.variance_bound}, {"Q range", &d.q_range}, {"simplex", &d.simplex},
            {"mixing floor", &d.mix_floor}, {"step bound", &d.omd_step}, {"dual range", &d.dual_range},
            {"variance floor", &d.sigma_floor}};
        for (const auto& [name, c] : counters) {
            total += c->checks;
            if (c->checks == 0 || c->failures != 0) {
                o.pass = false;
                o.detail += fmt::format("seed {} {}: {} checks, {} failures; ", res.seeds[i], name, c->checks,
                                        c->failures);
            }
        }
    }
    o.detail += fmt::format("{} checks over {} seeds, {} failures", total, res.seeds.size(), res.failures);
    return o;
}

Outcome criterion5() {
    const int d = 5, H = 10;
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> w(double(H) * H / d, 2.0 * H * H);
    double worst_theta = 0.0, worst_drift = 0.0;

    for (bool weighted : {true, false}) {
        SpdState s(d, 1.0 / 9.0);
        Mat sigma = Mat::Identity(d, d) / 9.0;
        Vec bvec = Vec::Zero(d);
        for (int t = 0; t < 500; ++t) {
            Vec x = Vec::NullaryExpr(d, [&] { return u(rng); });
            double scale = weighted ? 1.0 : double(H) * H;
            x *= scale / std::max(1.0, x.norm());
            double y = scale * (u(rng) + 1.0) / 2.0;
            double ws = weighted ? w(rng) : 1.0;
            s.rank1_update(x, y, ws);
            sigma += x * x.transpose() / ws;
            bvec += x * y / ws;
            Vec direct = sigma.fullPivLu().solve(bvec);
            worst_theta = std::max(worst_theta, (s.theta() - direct).cwiseAbs().maxCoeff());
            worst_drift = std::max(worst_drift, s.inverse_drift());
        }
    }

    // Regressions maintained inside a learner run.
    const CmdpInstance inst = build_benchmark_instance({});
    LearnerConfig cfg = LearnerConfig::defaults(inst.horizon, 300, inst.B);
    const auto cmp = constrained_comparator(inst, averaged_reward(inst, cfg.K));
    LearnerState fin(inst, cfg.lambda);
    run_pd_powers(inst, cfg, RngStream(1), cmp, &fin);
    double worst_run = 0.0;
    for (const auto* fam : {&fin.est_hat, &fin.est_tilde})
        for (const auto& pair : *fam)
            for (const auto& st : pair) {
                Vec direct = st.sigma().fullPivLu().solve(st.bvec());
                worst_run = std::max(worst_run, (st.theta() - direct).cwiseAbs().maxCoeff());
                worst_drift = std::max(worst_drift, st.inverse_drift());
            }

    Outcome o;
    o.pass = worst_theta <= 1e-8 && worst_run <= 1e-8 && worst_drift <= 1e-8;
    o.detail = fmt::format("max |theta - direct| {:.2e} (random sequences), {:.2e} (learner run); max drift {:.2e}",
                           worst_theta, worst_run, worst_drift);
    return o;
}

Outcome criterion6() {
    Outcome o;
    const CmdpInstance tiny = build_tiny_instance();
    const auto rbar = averaged_reward(tiny, 1);
    const double cmp = constrained_comparator(tiny, rbar).value_r;
    const double brute = brute_force_comparator(tiny, rbar);
    o.pass = std::abs(cmp - brute) <= 1e-6;
    o.detail = fmt::format("comparator {:.9f} vs brute force {:.9f}", cmp, brute);

    const CmdpInstance inst = build_benchmark_instance({});
    const int H = inst.horizon, S = inst.num_states, A = inst.num_actions;
    std::vector<int> ones(std::size_t(H * S), A - 1);
    PolicyTable random_policy(H, S, A);
    std::mt19937_64 prng(31);
    std::gamma_distribution<double> gam(1.0, 1.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            double z = 0.0;
            for (int a = 0; a < A; ++a) z += (random_policy(h, s, a) = gam(prng));
            for (int a = 0; a < A; ++a) random_policy(h, s, a) /= z;
        }
    const std::pair<const char*, PolicyTable> policies[] = {
        {"uniform", PolicyTable::uniform(H, S, A)},
        {"all-ones", PolicyTable::deterministic(H, S, A, ones)},
        {"dirichlet", random_policy}};
    const int n = 100000;
    for (const auto& [name, pol] : policies) {
        const double exact = policy_value(inst, pol, inst.constraint);
        const RngStream rng(77);
        double sum = 0.0, sq = 0.0;
        for (int i = 1; i <= n; ++i) {
            auto ep = rollout(inst, pol, i, rng);
            double ret = 0.0;
            for (int h = 0; h < H; ++h)
                ret += inst.constraint(h, ep.states[std::size_t(h)], ep.actions[std::size_t(h)]);
            sum += ret;
            sq += ret * ret;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
        const bool ok = std::abs(mean - exact) <= 3.0 * se;
        o.pass = o.pass && ok;
        o.detail += fmt::format("; {} DP {:.5f} MC {:.5f} ({:.2f} SE)", name, exact, mean, std::abs(mean - exact) / se);
    }
    return o;
}

Outcome criterion7() {
    const auto& res = default_run();
    Outcome o;
    o.pass = true;
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < res.seeds.size(); ++i) {
        const auto& d = res.pd_powers[i].diagnostics;
        const double n = double(d.optimism_episodes);
        const double fr = n > 0 ? d.optimistic[kReward] / n : 0.0;
        const double fg = n > 0 ? d.optimistic[kConstraint] / n : 0.0;
        o.pass = o.pass && fr >= 0.95 && fg >= 0.95;
        parts.push_back(fmt::format("seed {}: r {:.4f} g {:.4f}", res.seeds[i], fr, fg));
    }
    for (std::size_t i = 0; i < parts.size(); ++i) o.detail += (i ? "; " : "") + parts[i];
    return o;
}

Outcome criterion8() {
    const CmdpInstance inst = build_benchmark_instance({});
    std::mt19937_64 rng(8);
    const ValidationReport rep = validate_instance(inst, 1000, rng);
    double max_theta = 0.0;
    for (double t : rep.theta_norms) max_theta = std::max(max_theta, t);
    Outcome o;
    o.pass = rep.passed && rep.max_prob_sum_error <= 1e-12 && max_theta <= 3.0 && rep.max_phi_V_norm <= 1.0;
    o.detail = fmt::format("prob-sum error {:.2e}, max ||theta*|| {:.5f}, max sampled ||phi_V|| {:.5f}",
                           rep.max_prob_sum_error, max_theta, rep.max_phi_V_norm);
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion9() {
    const std::int64_t offset = seed_offset_from_env();
    const fs::path dirs[] = {"acceptance_det_a", "acceptance_det_b", "acceptance_det_w1"};
    const int workers[] = {5, 5, 1};
    for (int i = 0; i < 3; ++i) {
        fs::remove_all(dirs[i]);
        RunConfig cfg = default_config(dirs[i]);
        cfg.workers = workers[i];
        run_experiment(cfg, offset);
    }
    Outcome o;
    o.pass = true;
    int files = 0;
    for (const auto& e : fs::directory_iterator(dirs[0])) {
        const std::string ref = slurp(e.path());
        for (int i = 1; i < 3; ++i) {
            const fs::path other = dirs[i] / e.path().filename();
            if (!fs::exists(other) || slurp(other) != ref) {
                o.pass = false;
                o.detail += fmt::format("{} differs in {}; ", e.path().filename().string(), dirs[i].string());
            }
        }
        ++files;
    }
    o.detail += fmt::format("{} files compared across two 5-worker runs and one 1-worker run", files);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"sublinear regret and violation; affine baseline", criterion1},
        {"random-policy violation anchor", criterion2},
        {"Slater margin", criterion3},
        {"inline invariants", criterion4},
        {"ridge maintenance vs direct solves", criterion5},
        {"comparator and DP vs independent oracles", criterion6},
        {"optimism frequency", criterion7},
        {"instance realizability", criterion8},
        {"determinism across runs and worker counts", criterion9},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            int c = std::atoi(argv[++i]);
            if (c < 1 || c > int(criteria.size())) {
                fmt::print(stderr, "no criterion {}\n", c);
                return 2;
            }
            selected.push_back(c);
        } else {
            fmt::print(stderr, "usage: acceptance [--criterion N]...\n");
            return 2;
        }
    }
    if (selected.empty())
        for (int c = 1; c <= int(criteria.size()); ++c) selected.push_back(c);

    bool all = true;
    for (int c : selected) {
        const auto& [name, fn] = criteria[std::size_t(c - 1)];
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, fmt::format("aborted: {}", e.what())};
        }
        all = all && o.pass;
        fmt::print("criterion {} {} {}: {}\n", c, o.pass ? "PASS" : "FAIL", name, o.detail);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
