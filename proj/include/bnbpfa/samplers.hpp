#pragma once

// One-sweep update kernels for every PFA prior variant, plus state
// initialization and forward (prior-predictive) draws.

#include "bnbpfa/count_matrix.hpp"
#include "bnbpfa/error.hpp"
#include "bnbpfa/hyper.hpp"
#include "bnbpfa/parallel.hpp"
#include "bnbpfa/pfa_model.hpp"
#include "bnbpfa/r_update.hpp"
#include "bnbpfa/rng.hpp"
#include "bnbpfa/special_math.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace bnbpfa {

// ---------------------------------------------------------------------------
// Full-conditional parameters
// ---------------------------------------------------------------------------

/// Beta(cε + x_··k, c(1-ε) + N r_k)
inline BetaParams p_conditional(const HyperParams& h, Count factor_total, std::size_t docs, double r) {
    const double eps = h.eps_value();
    return {h.c * eps + static_cast<double>(factor_total),
            h.c * (1.0 - eps) + static_cast<double>(docs) * r};
}

/// Scale 1 / (c₀ - N ln(1-p)) of the exact r conditional when x_··k = 0.
inline double empty_r_scale(const HyperParams& h, std::size_t docs, double p) {
    return 1.0 / (h.c0 - static_cast<double>(docs) * log1m(p));
}

/// P(z_ki = 1 | x_·ik = 0) = π (1-p)^r / (π (1-p)^r + 1 - π), from
/// x_·ik | z ~ NB(z r, p): NB(0, p) puts all its mass on zero and
/// NB(r, p) gives zero with probability (1-p)^r.
inline double sparse_z_probability(double pi, double p, double r) {
    const double on = pi * std::exp(r * log1m(p));
    return on / (on + (1.0 - pi));
}

namespace detail {

inline void update_phi_dirichlet(FactorState& s, const LatentAllocation& a, double a_phi, RngStream& rng,
                                 unsigned threads) {
    const auto terms = static_cast<Eigen::Index>(s.terms());
    parallel_for(s.factors(), threads, [&](std::size_t k) {
        RngStream fr = rng.derive("phi", k);
        const auto kk = static_cast<Eigen::Index>(k);
        std::vector<double> alphas(static_cast<std::size_t>(terms));
        std::vector<double> draw(alphas.size());
        for (Eigen::Index p = 0; p < terms; ++p)
            alphas[static_cast<std::size_t>(p)] = a_phi + static_cast<double>(a.term_factor()(p, kk));
        sample_dirichlet(alphas, draw, fr);
        for (Eigen::Index p = 0; p < terms; ++p) s.phi(p, kk) = draw[static_cast<std::size_t>(p)];
    });
}

inline void update_p_beta(FactorState& s, const LatentAllocation& a, const HyperParams& h,
                          RngStream& rng) {
    for (std::size_t k = 0; k < s.factors(); ++k) {
        RngStream fr = rng.derive("p", k);
        const auto kk = static_cast<Eigen::Index>(k);
        const BetaParams bp = p_conditional(h, a.factor_total()(kk), s.docs(), s.r(kk));
        s.p(kk) = sample_beta(bp.a, bp.b, fr);
    }
}

// θ_ki ~ Gamma(r_k + x_·ik, p_k)
inline void update_theta_nb(FactorState& s, const LatentAllocation& a, RngStream& rng, unsigned threads) {
    const auto factors = static_cast<Eigen::Index>(s.factors());
    parallel_for(s.docs(), threads, [&](std::size_t i) {
        RngStream dr = rng.derive("theta", i);
        const auto ii = static_cast<Eigen::Index>(i);
        for (Eigen::Index k = 0; k < factors; ++k)
            s.theta(k, ii) =
                sample_gamma(s.r(k) + static_cast<double>(a.doc_factor()(k, ii)), s.p(k), dr);
    });
}

inline std::vector<Count> factor_doc_counts(const LatentAllocation& a, Eigen::Index k) {
    std::vector<Count> counts(static_cast<std::size_t>(a.doc_factor().cols()));
    for (Eigen::Index i = 0; i < a.doc_factor().cols(); ++i)
        counts[static_cast<std::size_t>(i)] = a.doc_factor()(k, i);
    return counts;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// r_k update shared by the beta-gamma-gamma sweep: exact Gamma when the
/// factor holds no counts, Newton-guided MH otherwise.
inline void update_r_bgg(FactorState& s, const LatentAllocation& a, const HyperParams& h,
                         MhDiagnostics& diag, RngStream& rng) {
    const double shape = h.r_prior_shape(Variant::BGG);
    for (std::size_t k = 0; k < s.factors(); ++k) {
        RngStream fr = rng.derive("r", k);
        const auto kk = static_cast<Eigen::Index>(k);
        if (a.factor_total()(kk) == 0) {
            s.r(kk) = sample_gamma(shape, empty_r_scale(h, s.docs(), s.p(kk)), fr);
            continue;
        }
        const auto counts = detail::factor_doc_counts(a, kk);
        const RConditional cond(counts, static_cast<double>(s.docs()), log1m(s.p(kk)), shape,
                                h.r_prior_rate(Variant::BGG));
        const RMhOutcome out = sample_r_mh(s.r(kk), cond, diag.mu[k], fr);
        diag.record(k, out);
        s.r(kk) = out.r;
    }
}

/// Beta-gamma-gamma-Poisson sweep: allocation → φ → p → r → θ.
inline void step_bgg(const CountMatrix& x, FactorState& s, LatentAllocation& a, const HyperParams& h,
                     const ChainConfig& cfg, MhDiagnostics& diag, RngStream& rng) {
    a = allocate_counts(x, s, rng, cfg.threads);
    detail::update_phi_dirichlet(s, a, h.a_phi_for(Variant::BGG), rng, cfg.threads);
    detail::update_p_beta(s, a, h, rng);
    update_r_bgg(s, a, h, diag, rng);
    detail::update_theta_nb(s, a, rng, cfg.threads);
}

/// Beta-gamma sweep with r_k frozen: allocation → φ → p → θ.
inline void step_bg(const CountMatrix& x, FactorState& s, LatentAllocation& a, const HyperParams& h,
                    const ChainConfig& cfg, RngStream& rng) {
    a = allocate_counts(x, s, rng, cfg.threads);
    detail::update_phi_dirichlet(s, a, h.a_phi_for(Variant::BG), rng, cfg.threads);
    detail::update_p_beta(s, a, h, rng);
    detail::update_theta_nb(s, a, rng, cfg.threads);
}

/**
 * Sparse gamma-gamma sweep (p_k fixed at 0.5):
 * allocation → φ → z → π → r → s, then θ = z ∘ s.
 *
 * z and r are drawn with s integrated out (x_·ik | z ~ NB(z r, p)), so s is
 * drawn last to stay consistent with both.
 */
inline void step_sgg(const CountMatrix& x, FactorState& s, LatentAllocation& a, const HyperParams& h,
                     const ChainConfig& cfg, MhDiagnostics& diag, RngStream& rng) {
    if (!s.z || !s.pi || !s.scores) throw ValidationError("step_sgg: state lacks z, pi or scores");
    auto& z = *s.z;
    auto& pi = *s.pi;
    auto& scores = *s.scores;
    const auto factors = static_cast<Eigen::Index>(s.factors());
    const auto docs = static_cast<Eigen::Index>(s.docs());

    a = allocate_counts(x, s, rng, cfg.threads);
    detail::update_phi_dirichlet(s, a, h.a_phi_for(Variant::SGG), rng, cfg.threads);

    parallel_for(s.docs(), cfg.threads, [&](std::size_t i) {
        RngStream dr = rng.derive("z", i);
        const auto ii = static_cast<Eigen::Index>(i);
        for (Eigen::Index k = 0; k < factors; ++k) {
            if (a.doc_factor()(k, ii) > 0) {
                z(k, ii) = 1;
            } else {
                z(k, ii) = sample_bernoulli(sparse_z_probability(pi(k), s.p(k), s.r(k)), dr) ? 1 : 0;
            }
        }
    });

    const double eps = h.eps_value();
    for (Eigen::Index k = 0; k < factors; ++k) {
        RngStream fr = rng.derive("pi", static_cast<std::uint64_t>(k));
        const auto on = static_cast<double>(z.row(k).cast<Count>().sum());
        pi(k) = sample_beta(h.c * eps + on, h.c * (1.0 - eps) + static_cast<double>(docs) - on, fr);
    }

    const double shape = h.r_prior_shape(Variant::SGG);
    const double rate = h.r_prior_rate(Variant::SGG);
    for (Eigen::Index k = 0; k < factors; ++k) {
        RngStream fr = rng.derive("r", static_cast<std::uint64_t>(k));
        std::vector<Count> counts;
        double on = 0.0;
        for (Eigen::Index i = 0; i < docs; ++i) {
            if (z(k, i)) {
                counts.push_back(a.doc_factor()(k, i));
                on += 1.0;
            }
        }
        const RConditional cond(counts, on, log1m(s.p(k)), shape, rate);
        if (a.factor_total()(k) == 0) {
            s.r(k) = sample_gamma(shape, 1.0 / cond.empty_posterior_rate(), fr);
            continue;
        }
        const RMhOutcome out = sample_r_mh(s.r(k), cond, diag.mu[static_cast<std::size_t>(k)], fr);
        diag.record(static_cast<std::size_t>(k), out);
        s.r(k) = out.r;
    }

    parallel_for(s.docs(), cfg.threads, [&](std::size_t i) {
        RngStream dr = rng.derive("scores", i);
        const auto ii = static_cast<Eigen::Index>(i);
        for (Eigen::Index k = 0; k < factors; ++k) {
            if (z(k, ii)) {
                scores(k, ii) =
                    sample_gamma(s.r(k) + static_cast<double>(a.doc_factor()(k, ii)), s.p(k), dr);
                s.theta(k, ii) = scores(k, ii);
            } else {
                scores(k, ii) = sample_gamma(s.r(k), odds(s.p(k)), dr);
                s.theta(k, ii) = 0.0;
            }
        }
    });
}

/// Dirichlet-score sweep: allocation → φ → θ_i ~ Dir(a_θ + x_·i1, ..., a_θ + x_·iK).
inline void step_dir(const CountMatrix& x, FactorState& s, LatentAllocation& a, const HyperParams& h,
                     const ChainConfig& cfg, RngStream& rng) {
    a = allocate_counts(x, s, rng, cfg.threads);
    detail::update_phi_dirichlet(s, a, h.a_phi_for(Variant::DIR), rng, cfg.threads);
    const double a_theta = h.a_theta_for(Variant::DIR);
    const auto factors = static_cast<Eigen::Index>(s.factors());
    parallel_for(s.docs(), cfg.threads, [&](std::size_t i) {
        RngStream dr = rng.derive("theta", i);
        const auto ii = static_cast<Eigen::Index>(i);
        std::vector<double> alphas(static_cast<std::size_t>(factors));
        std::vector<double> draw(alphas.size());
        for (Eigen::Index k = 0; k < factors; ++k)
            alphas[static_cast<std::size_t>(k)] = a_theta + static_cast<double>(a.doc_factor()(k, ii));
        sample_dirichlet(alphas, draw, dr);
        for (Eigen::Index k = 0; k < factors; ++k) s.theta(k, ii) = draw[static_cast<std::size_t>(k)];
    });
}

namespace detail {

inline void refresh_g(FactorState& s) {
    if (!s.g) return;
    *s.g = s.theta.rowwise().mean();
}

inline double score_rate(const HyperParams& h, const FactorState& s, Eigen::Index k, double a_theta) {
    const double g = s.g ? (*s.g)(k) : h.g;
    return a_theta / g; // zero when g is infinite
}

} // namespace detail

/**
 * Gamma-PFA Gibbs sweep: allocation →
 * φ_pk ~ Gamma(a_φ + x_p·k, 1/(b_φ + θ_k·)) →
 * θ_ki ~ Gamma(a_θ + x_·ik, 1/(a_θ/g_k + φ_·k)).
 */
inline void step_gamma_gibbs(const CountMatrix& x, FactorState& s, LatentAllocation& a,
                             const HyperParams& h, const ChainConfig& cfg, RngStream& rng) {
    a = allocate_counts(x, s, rng, cfg.threads);
    const double a_phi = h.a_phi_for(Variant::GAMMA_GIBBS);
    const double a_theta = h.a_theta_for(Variant::GAMMA_GIBBS);
    const Eigen::VectorXd theta_mass = s.theta.rowwise().sum();
    const auto terms = static_cast<Eigen::Index>(s.terms());
    const auto factors = static_cast<Eigen::Index>(s.factors());

    parallel_for(s.factors(), cfg.threads, [&](std::size_t kk) {
        const auto k = static_cast<Eigen::Index>(kk);
        RngStream fr = rng.derive("phi", kk);
        const double rate = h.b_phi + theta_mass(k);
        if (!(rate > 0.0))
            throw NumericError("step_gamma_gibbs: b_phi + theta_k. is zero for factor " + std::to_string(kk));
        for (Eigen::Index p = 0; p < terms; ++p)
            s.phi(p, k) = sample_gamma(a_phi + static_cast<double>(a.term_factor()(p, k)), 1.0 / rate, fr);
    });

    const Eigen::RowVectorXd loading_mass = s.phi.colwise().sum();
    parallel_for(s.docs(), cfg.threads, [&](std::size_t i) {
        RngStream dr = rng.derive("theta", i);
        const auto ii = static_cast<Eigen::Index>(i);
        for (Eigen::Index k = 0; k < factors; ++k) {
            const double rate = detail::score_rate(h, s, k, a_theta) + loading_mass(k);
            s.theta(k, ii) =
                sample_gamma(a_theta + static_cast<double>(a.doc_factor()(k, ii)), 1.0 / rate, dr);
        }
    });
    if (h.estimate_g) detail::refresh_g(s);
}

/// Result of one EM update: expected factor totals Σ_cells x_pi φ_pk θ_ki / λ_pi.
struct EmStepInfo {
    Eigen::VectorXd expected_factor_total;
};

/**
 * MAP-EM update of the gamma PFA:
 * φ_pk ← (a_φ - 1 + φ_pk Σ_i x_pi θ_ki / λ_pi) / (b_φ + θ_k·), then, with the
 * new loadings, θ_ki ← (a_θ - 1 + θ_ki Σ_p x_pi φ_pk / λ_pi) / (a_θ/g_k + φ_·k).
 * With b_φ = 0, a_φ = a_θ = 1 and g = ∞ these are the KL-NMF multiplicative updates.
 */
inline EmStepInfo step_gamma_em(const CountMatrix& x, FactorState& s, const HyperParams& h) {
    check_dimensions(x, s);
    const double a_phi = h.a_phi_for(Variant::GAMMA_EM);
    const double a_theta = h.a_theta_for(Variant::GAMMA_EM);
    const auto factors = static_cast<Eigen::Index>(s.factors());

    auto ratio = [&](const CountEntry& e) {
        const double rate = compose_rate(s, e.term, e.doc);
        if (!(rate > 0.0)) throw DegeneracyError("step_gamma_em: zero rate at an observed count", e.term, e.doc);
        return static_cast<double>(e.count) / rate;
    };

    Eigen::MatrixXd phi_acc = Eigen::MatrixXd::Zero(s.phi.rows(), s.phi.cols());
    for (const auto& e : x.entries()) phi_acc.row(e.term) += ratio(e) * s.theta.col(e.doc).transpose();
    const Eigen::VectorXd theta_mass = s.theta.rowwise().sum();
    for (Eigen::Index k = 0; k < factors; ++k) {
        const double denom = h.b_phi + theta_mass(k);
        if (!(denom > 0.0)) throw NumericError("step_gamma_em: b_phi + theta_k. is zero");
        s.phi.col(k) = ((a_phi - 1.0) + s.phi.col(k).array() * phi_acc.col(k).array()) / denom;
    }

    Eigen::MatrixXd theta_acc = Eigen::MatrixXd::Zero(s.theta.rows(), s.theta.cols());
    EmStepInfo info{Eigen::VectorXd::Zero(factors)};
    for (const auto& e : x.entries()) {
        const double rr = ratio(e);
        theta_acc.col(e.doc) += rr * s.phi.row(e.term).transpose();
    }
    const Eigen::RowVectorXd loading_mass = s.phi.colwise().sum();
    for (Eigen::Index k = 0; k < factors; ++k) {
        const double denom = detail::score_rate(h, s, k, a_theta) + loading_mass(k);
        if (!(denom > 0.0)) throw NumericError("step_gamma_em: a_theta/g_k + phi_.k is zero");
        s.theta.row(k) = ((a_theta - 1.0) + s.theta.row(k).array() * theta_acc.row(k).array()) / denom;
    }
    if (h.estimate_g) detail::refresh_g(s);

    for (const auto& e : x.entries()) {
        const double rate = compose_rate(s, e.term, e.doc);
        if (rate > 0.0)
            info.expected_factor_total +=
                (static_cast<double>(e.count) / rate) *
                (s.phi.row(e.term).transpose().array() * s.theta.col(e.doc).array()).matrix();
    }
    return info;
}

/// D_KL(X ‖ ΦΘ) = Σ [x ln(x/λ) - x + λ] over all cells.
inline double kl_divergence(const CountMatrix& x, const FactorState& s) {
    double d = 0.0;
    for (const auto& e : x.entries()) {
        const double rate = compose_rate(s, e.term, e.doc);
        const auto c = static_cast<double>(e.count);
        if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
        d += c * std::log(c / rate) - c;
    }
    const Eigen::RowVectorXd loading_mass = s.phi.colwise().sum();
    return d + (loading_mass * s.theta).sum();
}

// ---------------------------------------------------------------------------
// Initialization and forward draws
// ---------------------------------------------------------------------------

/**
 * Starting state: Φ columns from Dir(1, ..., 1); Θ entries from Gamma(1, 1)
 * (Dirichlet variant: columns from Dir(1, ..., 1)); p_k from Beta(cε, c(1-ε));
 * r_k = 1 (r_fixed for BG).
 */
inline FactorState init_state(Variant v, std::size_t terms, std::size_t docs, const HyperParams& h,
                              RngStream& rng) {
    h.validate(v);
    const auto P = static_cast<Eigen::Index>(terms);
    const auto N = static_cast<Eigen::Index>(docs);
    const auto K = static_cast<Eigen::Index>(h.K);
    FactorState s;
    s.phi.resize(P, K);
    s.theta.resize(K, N);

    RngStream phi_rng = rng.derive("init-phi");
    std::vector<double> ones(static_cast<std::size_t>(P), 1.0);
    std::vector<double> col(ones.size());
    for (Eigen::Index k = 0; k < K; ++k) {
        sample_dirichlet(ones, col, phi_rng);
        for (Eigen::Index p = 0; p < P; ++p) s.phi(p, k) = col[static_cast<std::size_t>(p)];
    }

    RngStream theta_rng = rng.derive("init-theta");
    if (v == Variant::DIR) {
        std::vector<double> kones(static_cast<std::size_t>(K), 1.0);
        std::vector<double> kcol(kones.size());
        for (Eigen::Index i = 0; i < N; ++i) {
            sample_dirichlet(kones, kcol, theta_rng);
            for (Eigen::Index k = 0; k < K; ++k) s.theta(k, i) = kcol[static_cast<std::size_t>(k)];
        }
    } else {
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index k = 0; k < K; ++k) s.theta(k, i) = sample_gamma(1.0, 1.0, theta_rng);
    }

    RngStream nb_rng = rng.derive("init-nb");
    const double eps = h.eps_value();
    switch (v) {
    case Variant::BGG:
    case Variant::BG:
        s.p.resize(K);
        for (Eigen::Index k = 0; k < K; ++k) s.p(k) = sample_beta(h.c * eps, h.c * (1.0 - eps), nb_rng);
        s.r = Eigen::VectorXd::Constant(K, v == Variant::BG ? h.r_fixed : 1.0);
        break;
    case Variant::SGG:
        s.p = Eigen::VectorXd::Constant(K, 0.5);
        s.r = Eigen::VectorXd::Ones(K);
        s.z = BinaryMat::Ones(K, N);
        s.pi = Eigen::VectorXd(K);
        for (Eigen::Index k = 0; k < K; ++k) (*s.pi)(k) = sample_beta(h.c * eps, h.c * (1.0 - eps), nb_rng);
        s.scores = s.theta;
        break;
    case Variant::GAMMA_GIBBS:
    case Variant::GAMMA_EM:
        s.g = Eigen::VectorXd::Constant(K, h.g);
        break;
    case Variant::DIR:
        break;
    }
    return s;
}

/**
 * Draw of all latent variables from the prior of variant v (BGG, SGG or BG):
 * φ_k ~ Dir(a_φ); for BGG p_k ~ Beta(cε, c(1-ε)), r_k ~ Gamma(c₀r₀, 1/c₀),
 * θ_ki ~ Gamma(r_k, p_k/(1-p_k)).
 */
inline FactorState sample_prior_state(Variant v, std::size_t terms, std::size_t docs, const HyperParams& h,
                                      RngStream& rng) {
    if (!is_nonparametric(v)) throw DomainError("sample_prior_state: only BGG, SGG and BG have NB priors");
    h.validate(v);
    const auto P = static_cast<Eigen::Index>(terms);
    const auto N = static_cast<Eigen::Index>(docs);
    const auto K = static_cast<Eigen::Index>(h.K);
    const double eps = h.eps_value();
    FactorState s;
    s.phi.resize(P, K);
    s.theta.resize(K, N);
    s.p.resize(K);
    s.r.resize(K);

    std::vector<double> alphas(static_cast<std::size_t>(P), h.a_phi_for(v));
    std::vector<double> col(alphas.size());
    for (Eigen::Index k = 0; k < K; ++k) {
        sample_dirichlet(alphas, col, rng);
        for (Eigen::Index p = 0; p < P; ++p) s.phi(p, k) = col[static_cast<std::size_t>(p)];
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        switch (v) {
        case Variant::BGG:
            s.p(k) = sample_beta(h.c * eps, h.c * (1.0 - eps), rng);
            s.r(k) = sample_gamma(h.c0 * h.r0, 1.0 / h.c0, rng);
            break;
        case Variant::BG:
            s.p(k) = sample_beta(h.c * eps, h.c * (1.0 - eps), rng);
            s.r(k) = h.r_fixed;
            break;
        default:
            s.p(k) = 0.5;
            s.r(k) = sample_gamma(h.r0, 1.0, rng);
            break;
        }
    }
    if (v == Variant::SGG) {
        s.pi = Eigen::VectorXd(K);
        s.z = BinaryMat(K, N);
        s.scores = Eigen::MatrixXd(K, N);
        for (Eigen::Index k = 0; k < K; ++k) (*s.pi)(k) = sample_beta(h.c * eps, h.c * (1.0 - eps), rng);
    }
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index k = 0; k < K; ++k) {
            const double score = sample_gamma(s.r(k), odds(s.p(k)), rng);
            if (v == Variant::SGG) {
                const bool on = sample_bernoulli((*s.pi)(k), rng);
                (*s.z)(k, i) = on ? 1 : 0;
                (*s.scores)(k, i) = score;
                s.theta(k, i) = on ? score : 0.0;
            } else {
                s.theta(k, i) = score;
            }
        }
    }
    return s;
}

/**
 * βγΓ generative draw with the factor parameters given: φ_k ~ Dir(a_φ),
 * θ_ki ~ Gamma(r_k, p_k/(1-p_k)). Used to build synthetic corpora with a
 * known number of factors.
 */
inline FactorState synthetic_bgg_state(std::size_t terms, std::size_t docs, const std::vector<double>& r,
                                       const std::vector<double>& p, double a_phi, RngStream& rng) {
    if (r.size() != p.size() || r.empty()) throw DomainError("synthetic_bgg_state: need matching r and p");
    const auto P = static_cast<Eigen::Index>(terms);
    const auto N = static_cast<Eigen::Index>(docs);
    const auto K = static_cast<Eigen::Index>(r.size());
    FactorState s;
    s.phi.resize(P, K);
    s.theta.resize(K, N);
    s.r = Eigen::Map<const Eigen::VectorXd>(r.data(), K);
    s.p = Eigen::Map<const Eigen::VectorXd>(p.data(), K);
    std::vector<double> alphas(static_cast<std::size_t>(P), a_phi);
    std::vector<double> col(alphas.size());
    for (Eigen::Index k = 0; k < K; ++k) {
        sample_dirichlet(alphas, col, rng);
        for (Eigen::Index q = 0; q < P; ++q) s.phi(q, k) = col[static_cast<std::size_t>(q)];
    }
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index k = 0; k < K; ++k) s.theta(k, i) = sample_gamma(s.r(k), odds(s.p(k)), rng);
    return s;
}

/// x_pi ~ Pois(Σ_k φ_pk θ_ki) for every cell.
inline CountMatrix sample_counts(const FactorState& s, RngStream& rng) {
    std::vector<CountEntry> triplets;
    const Eigen::MatrixXd rates = s.phi * s.theta;
    for (Eigen::Index i = 0; i < rates.cols(); ++i)
        for (Eigen::Index p = 0; p < rates.rows(); ++p) {
            const Count c = sample_poisson(rates(p, i), rng);
            if (c > 0) triplets.push_back({static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(i), c});
        }
    return CountMatrix(s.terms(), s.docs(), std::move(triplets));
}

} // namespace bnbpfa
