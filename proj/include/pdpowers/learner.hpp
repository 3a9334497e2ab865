#pragma once

#include "pdpowers/core_model.hpp"
#include "pdpowers/environment.hpp"
#include "pdpowers/estimation.hpp"
#include "pdpowers/oracle.hpp"

#include <array>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdpowers {

enum class DualVariant { Regularized, Clipped };

struct LearnerConfig {
    long K = 2000;
    double alpha = 0.0;
    double eta = 0.0;
    double theta_mix = 0.0;
    double lambda = 0.0;
    double delta = 0.01;
    double B = 3.0;
    DualVariant dual = DualVariant::Regularized;
    double gamma_for_clipped = 0.0;
    bool diagnostics = true;
    /// Multiplier on all three confidence radii; 1 reproduces the analysed algorithm.
    double radius_scale = 1.0;

    /// alpha = 1/(H^2 sqrt K), eta = 1/(H sqrt K), theta_mix = 1/K, lambda = 1/B^2.
    static LearnerConfig defaults(int H, long K, double B);

    void validate() const;
};

/// Signal index: 0 = reward, 1 = constraint.
enum Signal : int { kReward = 0, kConstraint = 1 };

struct LearnerState {
    PolicyTable policy;
    double Y = 0.0;
    // est_hat[h][signal], est_tilde[h][signal]
    std::vector<std::array<SpdState, 2>> est_hat;
    std::vector<std::array<SpdState, 2>> est_tilde;
    std::array<ValueTables, 2> values;
    long k = 0;

    /// Uniform policy, Y = 0, every regression at lambda I.
    LearnerState(const CmdpInstance& inst, double lambda);
};

/// Thrown when an inline invariant fails; `check` names it.
class InvariantViolation : public std::runtime_error {
public:
    InvariantViolation(std::string check, const std::string& detail)
        : std::runtime_error(check + ": " + detail), check_(std::move(check)) {}
    const std::string& check() const { return check_; }

private:
    std::string check_;
};

struct CheckCounter {
    long checks = 0;
    long failures = 0;
    double min_slack = std::numeric_limits<double>::infinity();
};

/// Counters for the deterministic invariants checked inline during a run.
struct Diagnostics {
    CheckCounter variance_bound;  // variance-estimate error bound
    CheckCounter q_range;      // Q in [0, H-h+1]
    CheckCounter simplex;      // rows sum to 1 and stay positive
    CheckCounter mix_floor;    // perturbed policy >= theta_mix/|A|
    CheckCounter omd_step;     // ||pi' - pi~||_1 <= alpha H (1+Y)
    CheckCounter dual_range;   // 0 <= Y_k <= 3 H eta k
    CheckCounter sigma_floor;  // sigma_bar^2 >= H^2/d
    long optimism_episodes = 0;
    std::array<long, 2> optimistic = {0, 0};

    long total_checks() const;
    long total_failures() const;
};

struct PolicyStep {
    PolicyTable mixed;  // (1-theta) pi + theta uniform
    PolicyTable next;
};

/// Perturbed exponentiated-gradient step on Q^r + Y Q^g for every (h,s).
PolicyStep policy_update(const PolicyTable& prev, const StepTable& Q_r, const StepTable& Q_g, double Y,
                         double alpha, double theta_mix);

/// [(1 - alpha eta H^3) Y + eta (b - V_g - alpha H^3 - 2 theta H^2)]_+
double dual_update(double Y, double V_g_estimate, double b, int H, const LearnerConfig& cfg);

/// clip(Y + eta (b - V_g), [0, 2/gamma]); throws if gamma <= 0.
double dual_update_clipped(double Y, double V_g_estimate, double b, double eta, double gamma);

/**
 * Optimistic backward induction for both signals followed by ingestion of the
 * visited (s_h, a_h) into the weighted and second-moment regressions.
 * theta* of the instance is read only when `diag` is non-null.
 */
void backward_pass(LearnerState& state, const EpisodeRecord& ep, const CmdpInstance& inst,
                   const LearnerConfig& cfg, Diagnostics* diag);

struct MetricsRow {
    long k = 0;
    double V_est_r = 0.0;
    double V_est_g = 0.0;
    double V_true_r = 0.0;
    double V_true_g = 0.0;
    double V_star_r = 0.0;  // comparator value under r^k
    double Y = 0.0;
    double regret = 0.0;
    double violation = 0.0;
    long checks = 0;
    long failures = 0;

    bool operator==(const MetricsRow&) const = default;
};

struct MetricsSeries {
    std::vector<MetricsRow> rows;
};

struct RunResult {
    MetricsSeries series;
    Diagnostics diagnostics;
    std::vector<EpisodeRecord> episodes;  // trajectories only; reward tables dropped
};

/// K episodes of the primal-dual learner; throws InvariantViolation on a failed inline check.
RunResult run_pd_powers(const CmdpInstance& inst, const LearnerConfig& cfg, const RngStream& rng,
                        const ComparatorResult& comparator, LearnerState* final_state = nullptr);

/// Uniform policy for K episodes with the same metrics (estimate columns are NaN).
RunResult run_random_baseline(const CmdpInstance& inst, long K, const RngStream& rng,
                              const ComparatorResult& comparator);

}  // namespace pdpowers
