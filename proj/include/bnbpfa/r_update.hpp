#pragma once

// Full conditional of the negative binomial dispersion r_k and its
// Newton-guided Metropolis–Hastings update.

#include "bnbpfa/error.hpp"
#include "bnbpfa/rng.hpp"
#include "bnbpfa/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace bnbpfa {

/**
 * log p(r | -) up to a constant for
 *   r ~ Gamma(shape, 1/rate),  x_i ~ NB(r, p), i = 1..n_terms.
 *
 * g(r) = (shape-1) ln r - rate r + n r ln(1-p) + Σ_i [lnΓ(r+x_i) - lnΓ(r)].
 * Terms with x_i = 0 cancel, so only the positive counts are stored.
 */
class RConditional {
  public:
    RConditional(std::span<const Count> counts, double n_terms, double log1m_p,
                 double prior_shape, double prior_rate)
        : n_terms_(n_terms), log1m_p_(log1m_p), shape_(prior_shape), rate_(prior_rate) {
        for (Count x : counts)
            if (x > 0) positive_.push_back(static_cast<double>(x));
    }

    double log_density(double r) const {
        if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
        double v = (shape_ - 1.0) * std::log(r) - rate_ * r + n_terms_ * r * log1m_p_;
        const double lg = std::lgamma(r);
        for (double x : positive_) v += std::lgamma(r + x) - lg;
        return v;
    }

    /// g'(r)
    double d1(double r) const {
        double v = (shape_ - 1.0) / r - rate_ + n_terms_ * log1m_p_;
        const double psi = digamma(r);
        for (double x : positive_) v += digamma(r + x) - psi;
        return v;
    }

    /// g''(r)
    double d2(double r) const {
        double v = -(shape_ - 1.0) / (r * r);
        const double psi1 = trigamma(r);
        for (double x : positive_) v += trigamma(r + x) - psi1;
        return v;
    }

    bool has_counts() const noexcept { return !positive_.empty(); }
    double prior_shape() const noexcept { return shape_; }
    double prior_rate() const noexcept { return rate_; }
    /// Rate of the exact Gamma conditional when every count is zero.
    double empty_posterior_rate() const noexcept { return rate_ - n_terms_ * log1m_p_; }

  private:
    std::vector<double> positive_;
    double n_terms_;
    double log1m_p_;
    double shape_;
    double rate_;
};

/// Proposal used from a given current point.
struct RProposal {
    bool newton;   ///< false: independence draw from the prior
    double center; ///< r̃ = r - g'(r)/g''(r)
    double sd;     ///< μ √r̃
};

/// Newton-step proposal N(r̃, μ√r̃) at r, or the prior when the Newton step
/// is unusable (non-finite or non-negative g'', or r̃ <= 0).
inline RProposal r_proposal_at(const RConditional& cond, double r, double mu) {
    const double g2 = cond.d2(r);
    if (std::isfinite(g2) && g2 < 0.0) {
        const double center = r - cond.d1(r) / g2;
        if (std::isfinite(center) && center > 0.0)
            return {true, center, mu * std::sqrt(center)};
    }
    return {false, 0.0, 0.0};
}

/// log q(to | from).
inline double r_proposal_log_density(const RConditional& cond, double to, double from, double mu) {
    const RProposal q = r_proposal_at(cond, from, mu);
    if (q.newton) return normal_log_pdf(to, q.center, q.sd);
    return gamma_log_pdf(to, cond.prior_shape(), 1.0 / cond.prior_rate());
}

/// ln of the Hastings ratio π(to) q(from|to) / (π(from) q(to|from)).
inline double r_log_acceptance_ratio(const RConditional& cond, double from, double to, double mu) {
    if (!(to > 0.0)) return -std::numeric_limits<double>::infinity();
    return cond.log_density(to) - cond.log_density(from) +
           r_proposal_log_density(cond, from, to, mu) - r_proposal_log_density(cond, to, from, mu);
}

/// min(1, exp(log ratio))
inline double r_acceptance_probability(const RConditional& cond, double from, double to, double mu) {
    const double lr = r_log_acceptance_ratio(cond, from, to, mu);
    return lr >= 0.0 ? 1.0 : std::exp(lr);
}

struct RMhOutcome {
    double r;
    bool accepted;
    bool fallback;    ///< prior proposal used instead of the Newton step
    double laplace_mu; ///< μ that makes the proposal sd match 1/√(-g''(r̃)); 0 if unknown
};

/**
 * One Metropolis–Hastings update of r.
 *
 * Proposes r' ~ N(r̃, μ√r̃) around a Newton step from the current r and
 * accepts with the full Hastings ratio; the proposal mean depends on the
 * starting point, so both directions' densities enter. r' <= 0 is rejected.
 */
inline RMhOutcome sample_r_mh(double r, const RConditional& cond, double mu, RngStream& rng) {
    if (!(r > 0.0)) detail::domain_fail("sample_r_mh", "current r must be positive");
    const RProposal q = r_proposal_at(cond, r, mu);
    double laplace_mu = 0.0;
    double proposal;
    if (q.newton) {
        proposal = q.center + q.sd * sample_normal(rng);
        const double curvature = cond.d2(q.center);
        if (std::isfinite(curvature) && curvature < 0.0)
            laplace_mu = 1.0 / std::sqrt(-curvature * q.center);
    } else {
        proposal = sample_gamma(cond.prior_shape(), 1.0 / cond.prior_rate(), rng);
    }
    const double u = rng.uniform();
    const bool accept = proposal > 0.0 && std::log(u) < r_log_acceptance_ratio(cond, r, proposal, mu);
    return {accept ? proposal : r, accept, !q.newton, laplace_mu};
}

/**
 * Per-factor MH bookkeeping and step-size adaptation.
 *
 * Every window during burn-in, a factor with acceptance above the target
 * interval widens its step (μ × 1.2). Below the interval the step shrinks
 * (μ × 0.8) unless the proposal is already narrower than the local Laplace
 * scale; there acceptance falls as μ shrinks, so μ jumps up to that scale.
 */
struct MhDiagnostics {
    std::vector<double> mu;
    std::vector<double> laplace_mu;
    std::vector<std::size_t> proposed;
    std::vector<std::size_t> accepted;
    std::vector<std::size_t> window_proposed;
    std::vector<std::size_t> window_accepted;
    std::vector<bool> adapted;
    std::size_t sweep_proposed = 0;
    std::size_t sweep_accepted = 0;
    std::size_t fallbacks = 0;

    MhDiagnostics() = default;
    MhDiagnostics(std::size_t factors, double mu0)
        : mu(factors, mu0), laplace_mu(factors, 0.0), proposed(factors, 0), accepted(factors, 0),
          window_proposed(factors, 0), window_accepted(factors, 0), adapted(factors, false) {}

    std::size_t factors() const noexcept { return mu.size(); }

    void record(std::size_t k, const RMhOutcome& out) {
        ++proposed[k];
        ++window_proposed[k];
        ++sweep_proposed;
        if (out.accepted) {
            ++accepted[k];
            ++window_accepted[k];
            ++sweep_accepted;
        }
        if (out.fallback) ++fallbacks;
        if (out.laplace_mu > 0.0) laplace_mu[k] = out.laplace_mu;
    }

    /// Acceptance rate of factor k since the last reset; NaN without proposals.
    double acceptance_rate(std::size_t k) const {
        return proposed[k] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : static_cast<double>(accepted[k]) / static_cast<double>(proposed[k]);
    }

    void begin_sweep() noexcept { sweep_proposed = sweep_accepted = 0; }

    void adapt(double low, double high, std::size_t min_proposals = 20) {
        for (std::size_t k = 0; k < factors(); ++k) {
            if (window_proposed[k] >= min_proposals) {
                adapted[k] = true;
                const double rate = static_cast<double>(window_accepted[k]) /
                                    static_cast<double>(window_proposed[k]);
                if (rate > high) {
                    mu[k] *= 1.2;
                } else if (rate < low) {
                    if (laplace_mu[k] > 0.0 && mu[k] < laplace_mu[k])
                        mu[k] = std::max(mu[k] * 1.2, laplace_mu[k]);
                    else
                        mu[k] *= 0.8;
                }
            }
            window_proposed[k] = window_accepted[k] = 0;
        }
    }

    /// Factors that never completed an adaptation window take the median
    /// step of those that did. Called once, when burn-in ends.
    void share_unadapted() {
        std::vector<double> tuned;
        for (std::size_t k = 0; k < factors(); ++k)
            if (adapted[k]) tuned.push_back(mu[k]);
        if (tuned.empty()) return;
        const auto mid = tuned.begin() + static_cast<std::ptrdiff_t>(tuned.size() / 2);
        std::nth_element(tuned.begin(), mid, tuned.end());
        for (std::size_t k = 0; k < factors(); ++k)
            if (!adapted[k]) mu[k] = *mid;
    }

    /// Clears the running totals (called when burn-in ends).
    void reset_totals() {
        std::fill(proposed.begin(), proposed.end(), 0);
        std::fill(accepted.begin(), accepted.end(), 0);
        fallbacks = 0;
    }
};

} // namespace bnbpfa
