#pragma once

#include "bnbpfa/bnb_process.hpp"
#include "bnbpfa/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace bnbpfa {

/// PFA prior variant.
enum class Variant {
    BGG,         ///< beta-gamma-gamma-Poisson: infer p_k, r_k
    SGG,         ///< sparse gamma-gamma: infer r_k, z_ki, π_k with p_k = 0.5
    BG,          ///< beta-gamma: infer p_k, r_k frozen
    DIR,         ///< Dirichlet factor scores
    GAMMA_GIBBS, ///< gamma loadings and scores, Gibbs sampling
    GAMMA_EM,    ///< gamma loadings and scores, MAP-EM (NMF family)
};

inline constexpr std::array<std::pair<Variant, std::string_view>, 6> kVariantNames{{
    {Variant::BGG, "BGG"},
    {Variant::SGG, "SGG"},
    {Variant::BG, "BG"},
    {Variant::DIR, "DIR"},
    {Variant::GAMMA_GIBBS, "GAMMA_GIBBS"},
    {Variant::GAMMA_EM, "GAMMA_EM"},
}};

inline std::string_view to_string(Variant v) {
    for (const auto& [variant, name] : kVariantNames)
        if (variant == v) return name;
    return "?";
}

inline Variant parse_variant(std::string_view name) {
    for (const auto& [variant, n] : kVariantNames)
        if (n == name) return variant;
    throw UsageError("unknown variant '" + std::string(name) +
                     "' (expected BGG, SGG, BG, DIR, GAMMA_GIBBS or GAMMA_EM)");
}

/// True for the variants that infer the number of active factors.
inline bool is_nonparametric(Variant v) {
    return v == Variant::BGG || v == Variant::SGG || v == Variant::BG;
}

inline bool is_gamma_variant(Variant v) {
    return v == Variant::GAMMA_GIBBS || v == Variant::GAMMA_EM;
}

/**
 * Model hyperparameters shared by all variants. Unset optionals resolve to
 * variant-dependent defaults through the accessors below.
 */
struct HyperParams {
    std::size_t K = 400; ///< K for finite variants, K_max for the others
    double c = 1.0;
    double c0 = 1.0;
    double r0 = 1.0;
    double gamma = 1.0;
    double alpha = 1.0;
    std::optional<double> eps;     ///< default 1 / K
    std::optional<double> a_phi;   ///< default 0.05 (1.01 for the gamma variants)
    std::optional<double> a_theta; ///< default 50 / K for DIR, 1.01 for the gamma variants
    double b_phi = 1e-6;
    double g = 1e6; ///< gamma-variant score scale; may be +infinity
    bool estimate_g = false;
    double r_fixed = 1.1; ///< frozen r_k of the beta-gamma variant

    double eps_value() const { return eps.value_or(1.0 / static_cast<double>(K)); }

    double a_phi_for(Variant v) const { return a_phi.value_or(is_gamma_variant(v) ? 1.01 : 0.05); }

    double a_theta_for(Variant v) const {
        if (a_theta) return *a_theta;
        if (v == Variant::DIR) return 50.0 / static_cast<double>(K);
        return 1.01;
    }

    /// Prior on r_k: Gamma(c₀r₀, 1/c₀) for BGG, Gamma(r₀, 1) for SGG.
    double r_prior_shape(Variant v) const { return v == Variant::SGG ? r0 : c0 * r0; }
    double r_prior_rate(Variant v) const { return v == Variant::SGG ? 1.0 : c0; }

    BnbHyper bnb() const {
        BnbHyper h;
        h.c = c;
        h.alpha = alpha;
        h.gamma_mass = gamma;
        h.eps = eps_value();
        h.r_base_shape = c0 * r0;
        h.r_base_scale = 1.0 / c0;
        return h;
    }

    void validate(Variant v) const {
        auto positive = [](double x, const char* name) {
            if (!(x > 0.0) || std::isnan(x))
                throw DomainError(std::string("hyperparameter ") + name + " must be positive");
        };
        if (K < 1) throw DomainError("hyperparameter K must be >= 1");
        positive(c, "c");
        positive(c0, "c0");
        positive(r0, "r0");
        positive(gamma, "gamma");
        positive(alpha, "alpha");
        positive(a_phi_for(v), "a_phi");
        positive(a_theta_for(v), "a_theta");
        positive(g, "g");
        positive(r_fixed, "r_fixed");
        if (!(b_phi >= 0.0)) throw DomainError("hyperparameter b_phi must be >= 0");
        if (is_nonparametric(v)) {
            const double e = eps_value();
            if (!(e > 0.0 && e < 0.5)) throw DomainError("hyperparameter eps must lie in (0, 0.5)");
        }
        if (v == Variant::GAMMA_EM && (a_phi_for(v) < 1.0 || a_theta_for(v) < 1.0))
            throw DomainError("EM updates need a_phi >= 1 and a_theta >= 1");
    }
};

/// Chain schedule and Metropolis–Hastings settings.
struct ChainConfig {
    Variant variant = Variant::BGG;
    std::size_t n_iterations = 2500;
    std::size_t burn_in = 1000;
    std::size_t thin = 5;
    double mh_stepsize = 0.01;
    std::size_t mh_adapt_window = 100;
    double accept_low = 0.25;
    double accept_high = 0.50;
    bool adapt = true;
    bool audit = false;
    unsigned threads = 1;

    void validate() const {
        if (n_iterations < 1) throw DomainError("n_iterations must be >= 1");
        if (burn_in >= n_iterations) throw DomainError("burn_in must be < n_iterations");
        if (thin < 1) throw DomainError("thin must be >= 1");
        if (!(mh_stepsize > 0.0)) throw DomainError("mh_stepsize must be positive");
        if (mh_adapt_window < 1) throw DomainError("mh_adapt_window must be >= 1");
        if (!(0.0 < accept_low && accept_low < accept_high && accept_high < 1.0))
            throw DomainError("target acceptance interval must satisfy 0 < low < high < 1");
    }

    /// floor((n_iterations - burn_in) / thin)
    std::size_t collected_count() const { return (n_iterations - burn_in) / thin; }

    bool collects(std::size_t iteration) const {
        return iteration > burn_in && (iteration - burn_in) % thin == 0;
    }
};

} // namespace bnbpfa
