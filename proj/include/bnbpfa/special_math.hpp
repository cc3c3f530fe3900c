#pragma once

#include "bnbpfa/error.hpp"
#include "bnbpfa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bnbpfa {

using Count = std::int64_t;

/// Beta draws are clamped to [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-16;
/// Upper bound applied to p / (1 - p).
inline constexpr double kMaxOdds = 1e15;

namespace detail {

inline void require_positive(const char* fn, double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x))
        domain_fail(fn, std::string(name) + " must be positive and finite, got " +
                            std::to_string(x));
}

inline void require_probability(const char* fn, double p) {
    if (!(p > 0.0 && p < 1.0))
        domain_fail(fn, "p must lie in (0, 1), got " + std::to_string(p));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Deterministic special functions
// ---------------------------------------------------------------------------

/// ln Γ(x) for x > 0.
inline double log_gamma(double x) {
    detail::require_positive("log_gamma", x, "x");
    return std::lgamma(x);
}

/// ψ(x) for x > 0. Shifts x up to at least 6 with ψ(x) = ψ(x+1) - 1/x and
/// finishes with the asymptotic series.
inline double digamma(double x) {
    detail::require_positive("digamma", x, "x");
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli terms B_2n / (2n x^2n), n = 1..7
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 -
                                        inv2 * (1.0 / 132 -
                                                inv2 * (691.0 / 32760 -
                                                        inv2 * (1.0 / 12)))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

/// ψ₁(x) for x > 0, same shift-then-asymptotic scheme as digamma.
inline double trigamma(double x) {
    detail::require_positive("trigamma", x, "x");
    double acc = 0.0;
    while (x < 6.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // 1/x + 1/(2x^2) + Σ B_2n / x^(2n+1), n = 1..7
    const double series =
        inv * inv2 *
        (1.0 / 6 -
         inv2 * (1.0 / 30 -
                 inv2 * (1.0 / 42 -
                         inv2 * (1.0 / 30 -
                                 inv2 * (5.0 / 66 -
                                         inv2 * (691.0 / 2730 - inv2 * (7.0 / 6)))))));
    return acc + inv + 0.5 * inv2 + series;
}

inline double log_beta(double a, double b) {
    detail::require_positive("beta_function", a, "a");
    detail::require_positive("beta_function", b, "b");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// B(a, b), evaluated in log space.
inline double beta_function(double a, double b) { return std::exp(log_beta(a, b)); }

/// ln(1 - p) without cancellation for small p.
inline double log1m(double p) noexcept { return std::log1p(-p); }

/// p / (1 - p), clamped at kMaxOdds.
inline double odds(double p) noexcept {
    return p >= 1.0 ? kMaxOdds : std::min(p / (1.0 - p), kMaxOdds);
}

inline double poisson_log_pmf(Count k, double lambda) {
    if (k < 0) return -std::numeric_limits<double>::infinity();
    if (lambda == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const auto kd = static_cast<double>(k);
    return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
}

inline double binomial_log_pmf(Count k, Count n, double p) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    const auto kd = static_cast<double>(k);
    const auto nd = static_cast<double>(n);
    const double log_choose =
        std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
    const double a = k == 0 ? 0.0 : kd * std::log(p);
    const double b = k == n ? 0.0 : (nd - kd) * log1m(p);
    return log_choose + a + b;
}

/// NB(k; r, p) = Γ(r+k) / (k! Γ(r)) (1-p)^r p^k.
inline double negative_binomial_log_pmf(Count k, double r, double p) {
    detail::require_positive("negative_binomial_log_pmf", r, "r");
    detail::require_probability("negative_binomial_log_pmf", p);
    if (k < 0) return -std::numeric_limits<double>::infinity();
    const auto kd = static_cast<double>(k);
    return std::lgamma(r + kd) - std::lgamma(kd + 1.0) - std::lgamma(r) + r * log1m(p) +
           (k == 0 ? 0.0 : kd * std::log(p));
}

/// Gamma(x; shape, scale) log density.
inline double gamma_log_pdf(double x, double shape, double scale) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
           shape * std::log(scale);
}

inline double normal_log_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

inline double sample_normal(RngStream& rng) {
    return std::normal_distribution<double>{}(rng);
}

namespace detail {

// Marsaglia–Tsang for shape >= 1, unit scale.
inline double gamma_mt(double shape, RngStream& rng) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = sample_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace detail

/// ln of a Gamma(shape, 1) draw. Stays finite for shapes far below 1 where
/// the draw itself underflows: Gamma(a) = Gamma(a+1) · U^{1/a}.
inline double sample_log_gamma(double shape, RngStream& rng) {
    detail::require_positive("sample_gamma", shape, "shape");
    if (shape >= 1.0) return std::log(detail::gamma_mt(shape, rng));
    const double boosted = std::log(detail::gamma_mt(shape + 1.0, rng));
    return boosted + std::log(rng.uniform()) / shape;
}

inline double sample_gamma(double shape, double scale, RngStream& rng) {
    detail::require_positive("sample_gamma", shape, "shape");
    detail::require_positive("sample_gamma", scale, "scale");
    if (shape >= 1.0) return scale * detail::gamma_mt(shape, rng);
    return scale * std::exp(sample_log_gamma(shape, rng));
}

/// Beta(a, b) draw, clamped to [kProbFloor, 1 - kProbFloor].
inline double sample_beta(double a, double b, RngStream& rng) {
    detail::require_positive("sample_beta", a, "a");
    detail::require_positive("sample_beta", b, "b");
    const double la = sample_log_gamma(a, rng);
    const double lb = sample_log_gamma(b, rng);
    // a / (a + b) = 1 / (1 + exp(lb - la))
    const double p = 1.0 / (1.0 + std::exp(lb - la));
    return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

inline bool sample_bernoulli(double prob, RngStream& rng) { return rng.uniform() < prob; }

/// Dirichlet draw written into `out`. Components are floored at the smallest
/// normal double so every entry is strictly positive.
inline void sample_dirichlet(std::span<const double> alphas, std::span<double> out,
                             RngStream& rng) {
    if (alphas.empty()) detail::domain_fail("sample_dirichlet", "empty parameter vector");
    if (out.size() != alphas.size())
        detail::domain_fail("sample_dirichlet", "output size mismatch");
    for (double a : alphas) detail::require_positive("sample_dirichlet", a, "alpha");

    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        out[j] = sample_log_gamma(alphas[j], rng);
        max_log = std::max(max_log, out[j]);
    }
    double total = 0.0;
    for (double& v : out) {
        v = std::max(std::exp(v - max_log), std::numeric_limits<double>::min());
        total += v;
    }
    for (double& v : out) v /= total;
}

inline std::vector<double> sample_dirichlet(std::span<const double> alphas, RngStream& rng) {
    std::vector<double> out(alphas.size());
    sample_dirichlet(alphas, out, rng);
    return out;
}

inline Count sample_binomial(Count n, double p, RngStream& rng) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<Count>(n, p)(rng);
}

/**
 * Multinomial draw from nonnegative, unnormalized weights, written into `out`.
 *
 * Uses sequential conditional binomials: x_k ~ Bin(n_left, w_k / Σ_{j>=k} w_j).
 * Cost is O(K) plus the binomial draws, and the output always sums to n.
 * `total` must be Σ w_k and positive when n > 0.
 */
inline void sample_multinomial_weights(Count n, std::span<const double> weights, double total,
                                       std::span<Count> out, RngStream& rng) {
    std::fill(out.begin(), out.end(), Count{0});
    if (n == 0) return;
    std::size_t last = weights.size();
    while (last > 0 && weights[last - 1] <= 0.0) --last;
    if (last == 0 || !(total > 0.0))
        detail::domain_fail("sample_multinomial", "no positive weight");
    Count left = n;
    double mass = total;
    for (std::size_t k = 0; k + 1 < last && left > 0; ++k) {
        const double w = weights[k];
        if (w <= 0.0) continue;
        const double prob = mass > w ? w / mass : 1.0;
        const Count draw = sample_binomial(left, prob, rng);
        out[k] = draw;
        left -= draw;
        mass -= w;
    }
    out[last - 1] += left;
}

/// Multinomial draw; `probs` must be a simplex vector within 1e-9.
inline std::vector<Count> sample_multinomial(Count n, std::span<const double> probs,
                                             RngStream& rng) {
    if (n < 0) detail::domain_fail("sample_multinomial", "negative trial count");
    if (probs.empty()) detail::domain_fail("sample_multinomial", "empty probability vector");
    double total = 0.0;
    for (double q : probs) {
        if (!(q >= 0.0) || !std::isfinite(q))
            detail::domain_fail("sample_multinomial", "negative or non-finite probability");
        total += q;
    }
    if (std::abs(total - 1.0) > 1e-9)
        detail::domain_fail("sample_multinomial",
                            "probabilities sum to " + std::to_string(total));
    std::vector<Count> out(probs.size());
    sample_multinomial_weights(n, probs, total, out, rng);
    return out;
}

inline Count sample_poisson(double lambda, RngStream& rng) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        detail::domain_fail("sample_poisson", "lambda must be finite and >= 0");
    if (lambda == 0.0) return 0;
    return std::poisson_distribution<Count>(lambda)(rng);
}

/// NB(r, p) as the gamma-Poisson composition λ ~ Gamma(r, p/(1-p)), k ~ Pois(λ).
inline Count sample_negative_binomial(double r, double p, RngStream& rng) {
    detail::require_positive("sample_negative_binomial", r, "r");
    detail::require_probability("sample_negative_binomial", p);
    const double lambda = sample_gamma(r, odds(p), rng);
    return sample_poisson(lambda, rng);
}

} // namespace bnbpfa
