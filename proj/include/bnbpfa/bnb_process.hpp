#pragma once

// Beta process machinery: the εBP finite Lévy measure, marked atom draws,
// negative binomial process counts, conjugate posterior parameters and the
// multi-scoop buffet (msIBP) simulation.

#include "bnbpfa/error.hpp"
#include "bnbpfa/rng.hpp"
#include "bnbpfa/special_math.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

namespace bnbpfa {

/// Mark measure R₀ carried by each atom.
enum class MarkMeasure {
    gamma,     ///< R₀ = γ · Gamma(r; c₀r₀, 1/c₀)
    delta_one, ///< R₀ = δ₁: every mark is r = 1 and γ = 1
};

/// How the number of atoms in an εBP truncation is chosen.
enum class TruncationMode {
    poisson,  ///< K ~ Pois(ν⁺)
    expected, ///< K = round(ν⁺)
};

struct BnbHyper {
    double c = 1.0;
    double alpha = 1.0;      ///< base measure mass B₀(Ω)
    double gamma_mass = 1.0; ///< mark measure mass R₀(ℝ⁺)
    double eps = 1.0 / 400;
    double r_base_shape = 1.0; ///< c₀ r₀
    double r_base_scale = 1.0; ///< 1 / c₀
    MarkMeasure mark = MarkMeasure::gamma;

    static BnbHyper unit_mark(double c, double alpha, double eps) {
        BnbHyper h;
        h.c = c;
        h.alpha = alpha;
        h.gamma_mass = 1.0;
        h.eps = eps;
        h.mark = MarkMeasure::delta_one;
        return h;
    }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError(std::string("BnbHyper: ") + name + " must be positive");
        };
        positive(c, "c");
        positive(alpha, "alpha");
        positive(gamma_mass, "gamma_mass");
        positive(r_base_shape, "r_base_shape");
        positive(r_base_scale, "r_base_scale");
        if (!(eps > 0.0 && eps < 0.5)) throw DomainError("BnbHyper: eps must lie in (0, 0.5)");
        if (mark == MarkMeasure::delta_one && gamma_mass != 1.0)
            throw DomainError("BnbHyper: the unit mark measure has mass 1");
    }
};

/// A finite εBP draw: atom weights p_k and marks r_k.
struct BnbAtoms {
    std::vector<double> p;
    std::vector<double> r;

    std::size_t size() const noexcept { return p.size(); }
};

/// Total mass ν⁺ = c γ α B(cε, c(1-ε)) of the εBP Lévy measure.
inline double eps_levy_mass(const BnbHyper& h) {
    h.validate();
    return h.c * h.gamma_mass * h.alpha * beta_function(h.c * h.eps, h.c * (1.0 - h.eps));
}

/// p-marginal density c p^{cε-1} (1-p)^{c(1-ε)-1} of the εBP Lévy measure.
inline double eps_levy_density(double p, const BnbHyper& h) {
    if (!(p > 0.0 && p < 1.0)) detail::domain_fail("eps_levy_density", "p must lie in (0, 1)");
    const double a = h.c * h.eps;
    const double b = h.c * (1.0 - h.eps);
    return h.c * std::exp((a - 1.0) * std::log(p) + (b - 1.0) * log1m(p));
}

/// p-marginal density c p^{-1} (1-p)^{c-1} of the beta process Lévy measure.
inline double bp_levy_density(double p, double c) {
    if (!(p > 0.0 && p < 1.0)) detail::domain_fail("bp_levy_density", "p must lie in (0, 1)");
    return c * std::exp(-std::log(p) + (c - 1.0) * log1m(p));
}

/// ν_εBP / ν_BP = (p / (1-p))^{cε}; tends to 1 as ε → 0.
inline double eps_density_ratio(double p, const BnbHyper& h) {
    if (!(p > 0.0 && p < 1.0)) detail::domain_fail("eps_density_ratio", "p must lie in (0, 1)");
    return std::exp(h.c * h.eps * (std::log(p) - log1m(p)));
}

/// K = round(ν⁺), at least 1. With c = γ = α = 1 and ε = 1/K this returns K.
inline std::size_t expected_atom_count(const BnbHyper& h) {
    return static_cast<std::size_t>(std::max(1.0, std::round(eps_levy_mass(h))));
}

inline double draw_mark(const BnbHyper& h, RngStream& rng) {
    if (h.mark == MarkMeasure::delta_one) return 1.0;
    return sample_gamma(h.r_base_shape, h.r_base_scale, rng);
}

/// Atoms of an εBP draw: p_k ~ Beta(cε, c(1-ε)), r_k ~ R₀/γ.
inline BnbAtoms draw_eps_bp(const BnbHyper& h, RngStream& rng,
                            TruncationMode mode = TruncationMode::poisson) {
    const double mass = eps_levy_mass(h);
    const auto k = mode == TruncationMode::poisson
                       ? static_cast<std::size_t>(sample_poisson(mass, rng))
                       : expected_atom_count(h);
    BnbAtoms atoms;
    atoms.p.resize(k);
    atoms.r.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        atoms.p[j] = sample_beta(h.c * h.eps, h.c * (1.0 - h.eps), rng);
        atoms.r[j] = draw_mark(h, rng);
    }
    return atoms;
}

/// One NBP draw: κ_k ~ NB(r_k, p_k) per atom.
inline std::vector<Count> draw_nbp(const BnbAtoms& atoms, RngStream& rng) {
    std::vector<Count> counts(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k)
        counts[k] = sample_negative_binomial(atoms.r[k], atoms.p[k], rng);
    return counts;
}

struct BetaParams {
    double a;
    double b;

    double mean() const { return a / (a + b); }
};

/// Conjugate update at an observed atom: Beta(m_nk, c + n r_k).
inline BetaParams posterior_p_params(Count m_nk, Count n, double r_k, const BnbHyper& h) {
    if (n < 1) detail::domain_fail("posterior_p_params", "n must be >= 1");
    detail::require_positive("posterior_p_params", r_k, "r_k");
    if (m_nk < 0) detail::domain_fail("posterior_p_params", "m_nk must be >= 0");
    return {static_cast<double>(m_nk), h.c + static_cast<double>(n) * r_k};
}

/// Same update with the εBP prior pseudo-counts added: Beta(cε + m, c(1-ε) + n r).
inline BetaParams eps_posterior_p_params(Count m_nk, Count n, double r_k, const BnbHyper& h) {
    const BetaParams lik = posterior_p_params(m_nk, n, r_k, h);
    return {h.c * h.eps + lik.a, lik.b - h.c * h.eps};
}

namespace detail {

// c ∫₀¹ (1-(1-p)^r) p⁻¹ (1-p)^{c+nr-1} dp by tanh-sinh; the factor
// (1-p)^{c+nr-1} may be singular at p = 1, so 1-p comes from the complement.
inline double new_dish_inner(double r, Count n, double c, double tol) {
    const double shape = c + static_cast<double>(n) * r - 1.0;
    auto f = [&](double p, double pc) {
        if (p <= 0.0) return c * r;
        const double l1m = (pc > 0.0 && p > 0.5) ? std::log(pc) : log1m(p);
        const double touched = -std::expm1(r * l1m);
        return c * touched / p * std::exp(shape * l1m);
    };
    boost::math::quadrature::tanh_sinh<double> ts(12);
    double err = 0.0;
    double l1 = 0.0;
    const double value = ts.integrate(f, 0.0, 1.0, tol, &err, &l1);
    if (!std::isfinite(value) || err > std::max(1e-9, 1e3 * tol * std::abs(value))) {
        std::ostringstream msg;
        msg << "new_dish_rate: inner quadrature did not converge (r=" << r << ", n=" << n
            << ", value=" << value << ", error=" << err << ")";
        throw NumericError(msg.str());
    }
    return value;
}

} // namespace detail

/**
 * Rate of the Poisson number of new dishes taken by customer n+1 after n
 * customers: α ∫∫ c (1-(1-p)^r) p⁻¹ (1-p)^{c+nr-1} dp R₀(dr).
 *
 * Closed form α c / (c + n) for the unit mark; otherwise Gauss–Kronrod over
 * r around a tanh-sinh inner integral, targeting 1e-8 absolute error.
 */
inline double new_dish_rate(Count n, const BnbHyper& h) {
    h.validate();
    if (n < 0) detail::domain_fail("new_dish_rate", "n must be >= 0");
    if (h.mark == MarkMeasure::delta_one)
        return h.alpha * h.c / (h.c + static_cast<double>(n));

    const double shape = h.r_base_shape;
    const double scale = h.r_base_scale;
    auto outer = [&](double r) {
        if (!(r > 0.0) || !std::isfinite(r)) return 0.0;
        const double dens = std::exp(gamma_log_pdf(r, shape, scale));
        if (dens == 0.0) return 0.0;
        return dens * detail::new_dish_inner(r, n, h.c, 1e-11);
    };
    double err = 0.0;
    double levels = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        outer, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-10, &err, &levels);
    const double rate = h.alpha * h.gamma_mass * value;
    if (!std::isfinite(rate) || h.alpha * h.gamma_mass * err > 1e-8) {
        std::ostringstream msg;
        msg << "new_dish_rate: outer quadrature did not converge (n=" << n
            << ", value=" << rate << ", error=" << h.alpha * h.gamma_mass * err
            << ", levels=" << levels << ")";
        throw NumericError(msg.str());
    }
    return rate;
}

struct AtomCount {
    std::size_t atom;
    Count count;

    friend bool operator==(const AtomCount&, const AtomCount&) = default;
};

/// Result of a multi-scoop buffet simulation over one shared atom list.
struct MsibpSimulation {
    BnbAtoms atoms;
    /// Nonzero scoop counts per customer, sorted by atom index.
    std::vector<std::vector<AtomCount>> customers;
    /// Number of atoms first touched by each customer.
    std::vector<Count> new_dishes;
};

namespace detail {

// NB(r, p) conditioned on a positive draw.
inline Count sample_positive_negative_binomial(double r, double p, RngStream& rng) {
    const double l1m = r * log1m(p);
    const double positive_mass = -std::expm1(l1m);
    if (positive_mass >= 0.05) {
        for (;;) {
            const Count k = sample_negative_binomial(r, p, rng);
            if (k > 0) return k;
        }
    }
    // Inversion over k >= 1 using pmf(k+1) = pmf(k) (r+k)/(k+1) p.
    const double target = rng.uniform() * positive_mass;
    double pmf = r * p * std::exp(l1m);
    double cum = pmf;
    Count k = 1;
    while (cum < target && k < 100000000) {
        pmf *= (r + static_cast<double>(k)) / static_cast<double>(k + 1) * p;
        cum += pmf;
        ++k;
    }
    return k;
}

} // namespace detail

/**
 * Customer-by-customer simulation of the multi-scoop buffet.
 *
 * Draws one εBP truncation, then gives every customer independent NB(r_k, p_k)
 * scoops of every atom. Instead of n draws per atom, the first customer to
 * touch an atom is drawn from its geometric law with success probability
 * 1 - (1-p)^r; only touched atoms get explicit scoop counts.
 */
inline MsibpSimulation simulate_msibp(std::size_t n_customers, const BnbHyper& h,
                                      RngStream& rng,
                                      TruncationMode mode = TruncationMode::poisson) {
    if (n_customers < 1) detail::domain_fail("simulate_msibp", "need at least one customer");
    MsibpSimulation sim;
    sim.atoms = draw_eps_bp(h, rng, mode);
    sim.customers.assign(n_customers, {});
    sim.new_dishes.assign(n_customers, 0);
    const auto n = static_cast<double>(n_customers);
    for (std::size_t k = 0; k < sim.atoms.size(); ++k) {
        const double p = sim.atoms.p[k];
        const double r = sim.atoms.r[k];
        const double log_idle = r * log1m(p); // ln P(no scoop for one customer)
        const double u = rng.uniform();
        // first touch G = ceil(ln(1-u) / ln q)
        if (log_idle == 0.0) continue;
        const double first = std::ceil(std::log1p(-u) / log_idle);
        if (!(first <= n)) continue;
        const auto g = static_cast<std::size_t>(std::max(1.0, first)) - 1;
        sim.new_dishes[g] += 1;
        sim.customers[g].push_back({k, detail::sample_positive_negative_binomial(r, p, rng)});
        for (std::size_t i = g + 1; i < n_customers; ++i) {
            const Count scoops = sample_negative_binomial(r, p, rng);
            if (scoops > 0) sim.customers[i].push_back({k, scoops});
        }
    }
    return sim;
}

} // namespace bnbpfa
