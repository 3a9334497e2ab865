#pragma once

#include "pdpowers/core_model.hpp"

namespace pdpowers {

/**
 * Ridge regression state Sigma = lambda I + sum_t x_t x_t' / w_t with
 * accumulator bvec = sum_t x_t y_t / w_t and estimate theta = Sigma^{-1} bvec.
 *
 * The inverse is maintained by rank-1 updates and re-derived from a Cholesky
 * factorization every `kRefactorPeriod` updates or when the drift
 * ||Sigma Sigma^{-1} - I||_max exceeds `kDriftTol`.
 */
class SpdState {
public:
    static constexpr int kRefactorPeriod = 64;
    static constexpr double kDriftTol = 1e-8;

    SpdState(int dim, double lambda);

    /// Adds the observation (x, y) with weight 1/weight_sq.
    void rank1_update(const Vec& x, double y, double weight_sq);

    /// ||x||_{Sigma^{-1}}.
    double bonus_norm(const Vec& x) const;

    /// ||v||_{Sigma}.
    double sigma_norm(const Vec& v) const;

    /// ||Sigma * SigmaInv - I||_max.
    double inverse_drift() const;

    int dim() const { return int(theta_.size()); }
    double lambda() const { return lambda_; }
    long update_count() const { return updates_; }
    long refactor_count() const { return refactors_; }
    const Mat& sigma() const { return sigma_; }
    const Mat& sigma_inv() const { return sigma_inv_; }
    const Vec& bvec() const { return bvec_; }
    const Vec& theta() const { return theta_; }

private:
    void refactor();

    double lambda_;
    Mat sigma_;
    Mat sigma_inv_;
    Vec bvec_;
    Vec theta_;
    long updates_ = 0;
    long refactors_ = 0;
};

struct ConfidenceRadii {
    long k = 0;
    double beta_hat = 0.0;    // optimistic bonus multiplier
    double beta_tilde = 0.0;  // radius of the second-moment regression
    double beta_check = 0.0;  // Bernstein radius of the weighted regression
};

/// Radii at episode k (natural logarithms). Throws on lambda <= 0 or delta outside (0,1).
ConfidenceRadii radii(long k, int d, int H, double lambda, double delta, double B);

/**
 * Variance estimate clip(<phi_V2, theta_tilde>, [0,H^2]) - clip(<phi_V, theta_hat>, [0,H])^2.
 * Not clipped below zero; sigma_bar_sq applies the floor.
 */
double variance_estimate(const SpdState& tilde, const SpdState& hat, const Vec& phi_V,
                         const Vec& phi_V2, int H);

/// min{H^2, beta_tilde * tilde_norm} + min{H^2, 2H * beta_check * hat_norm}.
double offset_E(const ConfidenceRadii& r, double tilde_norm, double hat_norm, int H);

/// max{H^2/d, vbar + E}.
double sigma_bar_sq(double vbar, double E, int H, int d);

struct VarianceBoundResult {
    bool passed = true;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // rhs - lhs
};

/**
 * Deterministic bound on the variance-estimate error given the true
 * parameters:
 *   |vbar - true_var| <= min{H^2, ||phi_V2||_{Sigma~^-1} ||theta~ - theta*||_{Sigma~}}
 *                      + min{H^2, 2H ||phi_V||_{Sigma^-1} ||theta^ - theta*||_{Sigma^}}.
 * A small absolute tolerance absorbs rounding in the equality cases.
 */
VarianceBoundResult variance_bound_check(const Vec& true_theta, const SpdState& tilde, const SpdState& hat,
                               const Vec& phi_V, const Vec& phi_V2, double vbar, double true_var,
                               int H);

}  // namespace pdpowers
