#include "pdpowers/estimation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdpowers {

SpdState::SpdState(int dim, double lambda)
    : lambda_(lambda),
      sigma_(Mat::Identity(dim, dim) * lambda),
      sigma_inv_(Mat::Identity(dim, dim) / lambda),
      bvec_(Vec::Zero(dim)),
      theta_(Vec::Zero(dim)) {
    if (dim < 1) throw std::invalid_argument("SpdState: dimension must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("SpdState: lambda must be positive");
}

void SpdState::rank1_update(const Vec& x, double y, double weight_sq) {
    if (!(weight_sq > 0.0)) throw std::invalid_argument("rank1_update: weight_sq must be positive");
    if (x.size() != dim()) throw std::invalid_argument("rank1_update: dimension mismatch");

    // Sherman-Morrison on Sigma + (x/w)(x/w)'.
    const Vec u = sigma_inv_ * x;
    const double denom = 1.0 + x.dot(u) / weight_sq;
    if (!(denom > 0.0))
        throw std::runtime_error(fmt::format("rank1_update: nonpositive denominator {}", denom));

    sigma_.noalias() += x * x.transpose() / weight_sq;
    sigma_inv_.noalias() -= u * u.transpose() / (weight_sq * denom);
    bvec_.noalias() += x * (y / weight_sq);
    ++updates_;

    if (updates_ % kRefactorPeriod == 0 || inverse_drift() > kDriftTol) refactor();
    theta_.noalias() = sigma_inv_ * bvec_;
}

void SpdState::refactor() {
    Eigen::LLT<Mat> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("SpdState: Sigma lost positive definiteness");
    sigma_inv_ = llt.solve(Mat::Identity(dim(), dim()));
    sigma_inv_ = 0.5 * (sigma_inv_ + sigma_inv_.transpose()).eval();
    ++refactors_;
}

double SpdState::inverse_drift() const {
    return (sigma_ * sigma_inv_ - Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

double SpdState::bonus_norm(const Vec& x) const {
    double q = x.dot(sigma_inv_ * x);
    if (q < 0.0) {
        if (q < -1e-12) throw std::runtime_error(fmt::format("bonus_norm: negative quadratic form {}", q));
        q = 0.0;
    }
    return std::sqrt(q);
}

double SpdState::sigma_norm(const Vec& v) const {
    return std::sqrt(std::max(0.0, v.dot(sigma_ * v)));
}

ConfidenceRadii radii(long k, int d, int H, double lambda, double delta, double B) {
    if (k < 1) throw std::invalid_argument("radii: k must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("radii: lambda must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("radii: delta must lie in (0,1)");
    if (d < 1 || H < 1) throw std::invalid_argument("radii: d and H must be positive");

    const double kd = double(k), dd = double(d), Hd = double(H);
    const double arg_conf = 8.0 * Hd * kd * kd / delta;
    const double arg_hat = 1.0 + kd / lambda;
    const double arg_tilde = 1.0 + kd * std::pow(Hd, 4) / (dd * lambda);
    if (arg_conf <= 1.0 || arg_hat <= 1.0 || arg_tilde <= 1.0)
        throw std::domain_error("radii: logarithm argument <= 1");

    const double log_conf = std::log(arg_conf);
    const double log_hat = std::log(arg_hat);
    const double log_tilde = std::log(arg_tilde);
    const double ridge = std::sqrt(lambda) * B;
    const double H2 = Hd * Hd;

    ConfidenceRadii r;
    r.k = k;
    r.beta_hat = 8.0 * std::sqrt(dd * log_hat * log_conf) + 4.0 * std::sqrt(dd) * log_conf + ridge;
    r.beta_tilde = 8.0 * H2 * std::sqrt(dd * log_tilde * log_conf) + 4.0 * H2 * log_conf + ridge;
    r.beta_check = 8.0 * dd * std::sqrt(log_hat * log_conf) + 4.0 * std::sqrt(dd) * log_conf + ridge;
    return r;
}

double variance_estimate(const SpdState& tilde, const SpdState& hat, const Vec& phi_V,
                         const Vec& phi_V2, int H) {
    const double Hd = H;
    const double second = std::clamp(phi_V2.dot(tilde.theta()), 0.0, Hd * Hd);
    const double first = std::clamp(phi_V.dot(hat.theta()), 0.0, Hd);
    return second - first * first;
}

double offset_E(const ConfidenceRadii& r, double tilde_norm, double hat_norm, int H) {
    const double H2 = double(H) * H;
    return std::min(H2, r.beta_tilde * tilde_norm) + std::min(H2, 2.0 * H * r.beta_check * hat_norm);
}

double sigma_bar_sq(double vbar, double E, int H, int d) {
    return std::max(double(H) * H / d, vbar + E);
}

VarianceBoundResult variance_bound_check(const Vec& true_theta, const SpdState& tilde, const SpdState& hat,
                               const Vec& phi_V, const Vec& phi_V2, double vbar, double true_var,
                               int H) {
    const double H2 = double(H) * H;
    VarianceBoundResult out;
    out.lhs = std::abs(vbar - true_var);
    out.rhs = std::min(H2, tilde.bonus_norm(phi_V2) * tilde.sigma_norm(tilde.theta() - true_theta)) +
              std::min(H2, 2.0 * H * hat.bonus_norm(phi_V) * hat.sigma_norm(hat.theta() - true_theta));
    out.slack = out.rhs - out.lhs;
    out.passed = out.slack >= -1e-9 * (1.0 + H2);
    return out;
}

}  // namespace pdpowers
