#include "pdpowers/learner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace pdpowers {

LearnerConfig LearnerConfig::defaults(int H, long K, double B) {
    LearnerConfig cfg;
    const double sqrtK = std::sqrt(double(K));
    cfg.K = K;
    cfg.alpha = 1.0 / (double(H) * H * sqrtK);
    cfg.eta = 1.0 / (double(H) * sqrtK);
    cfg.theta_mix = 1.0 / double(K);
    cfg.B = B;
    cfg.lambda = 1.0 / (B * B);
    return cfg;
}

void LearnerConfig::validate() const {
    auto bad = [](const char* key, const char* why) {
        throw std::invalid_argument(fmt::format("LearnerConfig.{}: {}", key, why));
    };
    if (K < 1) bad("K", "must be >= 1");
    if (!(alpha > 0.0)) bad("alpha", "must be positive");
    if (!(eta > 0.0)) bad("eta", "must be positive");
    if (!(theta_mix > 0.0 && theta_mix <= 1.0)) bad("theta_mix", "must lie in (0,1]");
    if (!(lambda > 0.0)) bad("lambda", "must be positive");
    if (!(delta > 0.0 && delta < 1.0)) bad("delta", "must lie in (0,1)");
    if (!(B > 0.0)) bad("B", "must be positive");
    if (!(radius_scale >= 0.0)) bad("radius_scale", "must be >= 0");
    if (dual == DualVariant::Clipped && !(gamma_for_clipped > 0.0))
        bad("gamma_for_clipped", "must be positive for the clipped dual update");
}

LearnerState::LearnerState(const CmdpInstance& inst, double lambda)
    : policy(PolicyTable::uniform(inst.horizon, inst.num_states, inst.num_actions)) {
    const int d = inst.features.dim();
    for (int h = 0; h < inst.horizon; ++h) {
        est_hat.push_back({SpdState(d, lambda), SpdState(d, lambda)});
        est_tilde.push_back({SpdState(d, lambda), SpdState(d, lambda)});
    }
    for (auto& v : values) v = ValueTables(inst.horizon, inst.num_states, inst.num_actions);
}

long Diagnostics::total_checks() const {
    return variance_bound.checks + q_range.checks + simplex.checks + mix_floor.checks + omd_step.checks +
           dual_range.checks + sigma_floor.checks;
}

long Diagnostics::total_failures() const {
    return variance_bound.failures + q_range.failures + simplex.failures + mix_floor.failures +
           omd_step.failures + dual_range.failures + sigma_floor.failures;
}

namespace {

/// Records a check; slack >= 0 means it held. `where` is only formatted on failure.
template <class Where>
void record(CheckCounter& c, const char* name, double slack, Where&& where) {
    ++c.checks;
    c.min_slack = std::min(c.min_slack, slack);
    if (!(slack >= 0.0)) {
        ++c.failures;
        throw InvariantViolation(name, fmt::format("slack {:.3e} at {}", slack, where()));
    }
}

}  // namespace

PolicyStep policy_update(const PolicyTable& prev, const StepTable& Q_r, const StepTable& Q_g, double Y,
                         double alpha, double theta_mix) {
    const int H = prev.horizon(), S = prev.num_states(), A = prev.num_actions();
    PolicyStep out{PolicyTable(H, S, A), PolicyTable(H, S, A)};
    std::vector<double> expo(static_cast<std::size_t>(A));
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            auto old_row = prev.row(h, s);
            auto mixed = out.mixed.row(h, s);
            for (int a = 0; a < A; ++a)
                mixed[std::size_t(a)] = (1.0 - theta_mix) * old_row[std::size_t(a)] + theta_mix / A;

            double top = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                expo[std::size_t(a)] = alpha * (Q_r(h, s, a) + Y * Q_g(h, s, a));
                top = std::max(top, expo[std::size_t(a)]);
            }
            auto next = out.next.row(h, s);
            double norm = 0.0;
            for (int a = 0; a < A; ++a) {
                next[std::size_t(a)] = mixed[std::size_t(a)] * std::exp(expo[std::size_t(a)] - top);
                norm += next[std::size_t(a)];
            }
            if (!(norm > 0.0))
                throw InvariantViolation("policy_update", fmt::format("normalizer {} at (h={}, s={})", norm, h + 1, s));
            for (double& p : next) p /= norm;
        }
    return out;
}

double dual_update(double Y, double V_g_estimate, double b, int H, const LearnerConfig& cfg) {
    const double H2 = double(H) * H, H3 = H2 * H;
    const double next = (1.0 - cfg.alpha * cfg.eta * H3) * Y +
                        cfg.eta * (b - V_g_estimate - cfg.alpha * H3 - 2.0 * cfg.theta_mix * H2);
    return std::max(0.0, next);
}

double dual_update_clipped(double Y, double V_g_estimate, double b, double eta, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("dual_update_clipped: gamma must be positive");
    return std::clamp(Y + eta * (b - V_g_estimate), 0.0, 2.0 / gamma);
}

void backward_pass(LearnerState& state, const EpisodeRecord& ep, const CmdpInstance& inst,
                   const LearnerConfig& cfg, Diagnostics* diag) {
    const int H = inst.horizon, S = inst.num_states, A = inst.num_actions;
    const int d = inst.features.dim();
    if (int(ep.states.size()) != H + 1 || int(ep.actions.size()) != H)
        throw std::invalid_argument("backward_pass: trajectory length does not match H");
    ConfidenceRadii rad = radii(ep.k, d, H, cfg.lambda, cfg.delta, cfg.B);
    rad.beta_hat *= cfg.radius_scale;
    rad.beta_tilde *= cfg.radius_scale;
    rad.beta_check *= cfg.radius_scale;
    const std::array<const SignalTable*, 2> signals = {&ep.revealed_rewards, &inst.constraint};
    const double floor_sq = double(H) * H / d;

    std::vector<double> next_sq(static_cast<std::size_t>(S));
    for (int h = H - 1; h >= 0; --h) {
        const double upper = double(H - h);
        for (int l = 0; l < 2; ++l) {
            ValueTables& vt = state.values[std::size_t(l)];
            SpdState& hat = state.est_hat[std::size_t(h)][std::size_t(l)];
            SpdState& tilde = state.est_tilde[std::size_t(h)][std::size_t(l)];
            const std::vector<double>& next_V = vt.V[std::size_t(h) + 1];
            const SignalTable& sig = *signals[std::size_t(l)];

            for (int s = 0; s < S; ++s) {
                double v = 0.0;
                for (int a = 0; a < A; ++a) {
                    const Vec x = inst.features.phi_V(next_V, s, a);
                    const double raw = sig(h, s, a) + hat.theta().dot(x) + rad.beta_hat * hat.bonus_norm(x);
                    const double q = std::clamp(raw, 0.0, upper);
                    if (diag) {
                        record(diag->q_range, "q_range", std::min(q, upper - q),
                               [&] { return fmt::format("k={} h={} s={} a={}", ep.k, h + 1, s, a); });
                    }
                    vt.Q(h, s, a) = q;
                    v += state.policy(h, s, a) * q;
                }
                vt.V[std::size_t(h)][std::size_t(s)] = v;
            }

            // Ingest the visited pair with the estimates of episode k.
            const int s_h = ep.states[std::size_t(h)];
            const int a_h = ep.actions[std::size_t(h)];
            const int s_next = ep.states[std::size_t(h) + 1];
            for (int s = 0; s < S; ++s) next_sq[std::size_t(s)] = next_V[std::size_t(s)] * next_V[std::size_t(s)];
            const Vec x = inst.features.phi_V(next_V, s_h, a_h);
            const Vec x2 = inst.features.phi_V(next_sq, s_h, a_h);

            const double vbar = variance_estimate(tilde, hat, x, x2, H);
            const double E = offset_E(rad, tilde.bonus_norm(x2), hat.bonus_norm(x), H);
            const double sbar_sq = sigma_bar_sq(vbar, E, H, d);

            if (diag) {
                auto where = [&] { return fmt::format("k={} h={} signal={}", ep.k, h + 1, l == 0 ? "r" : "g"); };
                const Vec& th = inst.theta_star[std::size_t(h)];
                const double mean = x.dot(th);
                const double true_var = x2.dot(th) - mean * mean;
                VarianceBoundResult p = variance_bound_check(th, tilde, hat, x, x2, vbar, true_var, H);
                record(diag->variance_bound, "variance_bound", p.passed ? std::max(p.slack, 0.0) : p.slack, where);
                record(diag->sigma_floor, "sigma_floor", sbar_sq - floor_sq, where);
            }

            const double target = next_V[std::size_t(s_next)];
            hat.rank1_update(x, target, sbar_sq);
            tilde.rank1_update(x2, target * target, 1.0);
        }
    }
}

namespace {

double value_at_start(const ValueTables& vt, const CmdpInstance& inst) {
    return vt.V.front()[std::size_t(inst.initial_state)];
}

void finish_metrics(MetricsSeries& series, double b) {
    std::vector<double> star, vr, vg;
    for (const auto& row : series.rows) {
        star.push_back(row.V_star_r);
        vr.push_back(row.V_true_r);
        vg.push_back(row.V_true_g);
    }
    RegretCurves curves = metrics(star, vr, vg, b);
    for (std::size_t i = 0; i < series.rows.size(); ++i) {
        series.rows[i].regret = curves.regret[i];
        series.rows[i].violation = curves.violation[i];
    }
}

}  // namespace

RunResult run_pd_powers(const CmdpInstance& inst, const LearnerConfig& cfg, const RngStream& rng,
                        const ComparatorResult& comparator, LearnerState* final_state) {
    cfg.validate();
    const int H = inst.horizon, A = inst.num_actions;
    const double b = inst.threshold;
    LearnerState state(inst, cfg.lambda);
    RunResult out;
    Diagnostics* diag = cfg.diagnostics ? &out.diagnostics : nullptr;
    const bool growth_bound_applies =
        cfg.eta <= 1.0 && cfg.alpha <= 1.0 / (double(H) * H) && cfg.theta_mix <= 1.0 / (2.0 * H);
    double prev_V_g = 0.0;

    out.series.rows.reserve(std::size_t(cfg.K));
    for (long k = 1; k <= cfg.K; ++k) {
        state.k = k;
        if (k > 1) {
            const double Y_prev = state.Y;
            PolicyStep step = policy_update(state.policy, state.values[kReward].Q,
                                            state.values[kConstraint].Q, Y_prev, cfg.alpha, cfg.theta_mix);
            state.Y = cfg.dual == DualVariant::Regularized
                          ? dual_update(Y_prev, prev_V_g, b, H, cfg)
                          : dual_update_clipped(Y_prev, prev_V_g, b, cfg.eta, cfg.gamma_for_clipped);

            if (diag) {
                const double floor = cfg.theta_mix / A;
                const double step_bound = cfg.alpha * H * (1.0 + Y_prev);
                for (int h = 0; h < H; ++h)
                    for (int s = 0; s < inst.num_states; ++s) {
                        auto mixed = step.mixed.row(h, s);
                        auto next = step.next.row(h, s);
                        double sum = 0.0, l1 = 0.0, min_mixed = 1.0, min_next = 1.0;
                        for (int a = 0; a < A; ++a) {
                            sum += next[std::size_t(a)];
                            l1 += std::abs(next[std::size_t(a)] - mixed[std::size_t(a)]);
                            min_mixed = std::min(min_mixed, mixed[std::size_t(a)]);
                            min_next = std::min(min_next, next[std::size_t(a)]);
                        }
                        auto where = [&] { return fmt::format("k={} h={} s={}", k, h + 1, s); };
                        double simplex_slack = 1e-12 - std::abs(sum - 1.0);
                        if (!(min_next > 0.0)) simplex_slack = -1.0;
                        record(diag->simplex, "simplex", simplex_slack, where);
                        record(diag->mix_floor, "mix_floor", min_mixed - floor, where);
                        record(diag->omd_step, "omd_step", step_bound + 1e-12 - l1, where);
                    }
                const double cap = growth_bound_applies ? 3.0 * H * cfg.eta * double(k)
                                                        : std::numeric_limits<double>::infinity();
                record(diag->dual_range, "dual_range", std::min(state.Y, cap - state.Y),
                       [&] { return fmt::format("k={} Y={}", k, state.Y); });
            }
            state.policy = std::move(step.next);
        }

        EpisodeRecord ep = rollout(inst, state.policy, k, rng);
        backward_pass(state, ep, inst, cfg, diag);

        MetricsRow row;
        row.k = k;
        row.V_est_r = value_at_start(state.values[kReward], inst);
        row.V_est_g = value_at_start(state.values[kConstraint], inst);
        row.V_true_r = policy_value(inst, state.policy, ep.revealed_rewards);
        row.V_true_g = policy_value(inst, state.policy, inst.constraint);
        row.V_star_r = comparator.value_under(inst, ep.revealed_rewards);
        row.Y = state.Y;
        if (diag) {
            ++diag->optimism_episodes;
            if (row.V_est_r >= row.V_true_r - 1e-9) ++diag->optimistic[kReward];
            if (row.V_est_g >= row.V_true_g - 1e-9) ++diag->optimistic[kConstraint];
            row.checks = diag->total_checks();
            row.failures = diag->total_failures();
        }
        out.series.rows.push_back(row);
        prev_V_g = row.V_est_g;

        ep.revealed_rewards = SignalTable();
        out.episodes.push_back(std::move(ep));
    }
    finish_metrics(out.series, b);
    if (final_state) *final_state = std::move(state);
    return out;
}

RunResult run_random_baseline(const CmdpInstance& inst, long K, const RngStream& rng,
                              const ComparatorResult& comparator) {
    if (K < 1) throw std::invalid_argument("run_random_baseline: K must be >= 1");
    const PolicyTable uniform = PolicyTable::uniform(inst.horizon, inst.num_states, inst.num_actions);
    const double V_g = policy_value(inst, uniform, inst.constraint);
    RunResult out;
    out.series.rows.reserve(std::size_t(K));
    for (long k = 1; k <= K; ++k) {
        EpisodeRecord ep = rollout(inst, uniform, k, rng);
        MetricsRow row;
        row.k = k;
        row.V_est_r = std::numeric_limits<double>::quiet_NaN();
        row.V_est_g = std::numeric_limits<double>::quiet_NaN();
        row.V_true_r = policy_value(inst, uniform, ep.revealed_rewards);
        row.V_true_g = V_g;
        row.V_star_r = comparator.value_under(inst, ep.revealed_rewards);
        out.series.rows.push_back(row);
        ep.revealed_rewards = SignalTable();
        out.episodes.push_back(std::move(ep));
    }
    finish_metrics(out.series, inst.threshold);
    return out;
}

}  // namespace pdpowers
