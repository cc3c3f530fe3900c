#pragma once

#include "bnbpfa/count_matrix.hpp"
#include "bnbpfa/error.hpp"
#include "bnbpfa/parallel.hpp"
#include "bnbpfa/rng.hpp"
#include "bnbpfa/special_math.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bnbpfa {

using CountMat = Eigen::Matrix<Count, Eigen::Dynamic, Eigen::Dynamic>;
using CountVec = Eigen::Matrix<Count, Eigen::Dynamic, 1>;
using BinaryMat = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/**
 * Latent variables of one chain.
 *
 * `theta` always holds the effective factor scores used by the likelihood.
 * For the sparse variant theta = z ∘ s, with s kept in `scores`.
 * `p` and `r` are empty for variants that carry no negative binomial
 * parameters (Dirichlet and gamma PFA).
 */
struct FactorState {
    Eigen::MatrixXd phi;   ///< P x K loadings
    Eigen::MatrixXd theta; ///< K x N scores
    Eigen::VectorXd p;     ///< K, in (0, 1)
    Eigen::VectorXd r;     ///< K, positive
    std::optional<BinaryMat> z;
    std::optional<Eigen::MatrixXd> scores;
    std::optional<Eigen::VectorXd> pi;
    std::optional<Eigen::VectorXd> g;

    std::size_t terms() const noexcept { return static_cast<std::size_t>(phi.rows()); }
    std::size_t factors() const noexcept { return static_cast<std::size_t>(phi.cols()); }
    std::size_t docs() const noexcept { return static_cast<std::size_t>(theta.cols()); }
    bool has_nb_params() const noexcept { return p.size() > 0 && r.size() > 0; }
};

inline void check_dimensions(const CountMatrix& x, const FactorState& s) {
    if (s.terms() != x.terms() || s.docs() != x.docs() ||
        static_cast<std::size_t>(s.theta.rows()) != s.factors())
        throw ValidationError("FactorState dimensions (" + std::to_string(s.terms()) + "x" +
                              std::to_string(s.factors()) + ", " +
                              std::to_string(s.theta.rows()) + "x" + std::to_string(s.docs()) +
                              ") do not match the " + std::to_string(x.terms()) + "x" +
                              std::to_string(x.docs()) + " count matrix");
}

/// Poisson rate Σ_k φ_pk θ_ki of one cell.
inline double compose_rate(const FactorState& s, std::size_t term, std::size_t doc) {
    return s.phi.row(static_cast<Eigen::Index>(term)).dot(s.theta.col(static_cast<Eigen::Index>(doc)));
}

/// Σ_{p,i} [x ln λ - λ - ln x!]. Zero cells enter through Σ_p λ_pi = Σ_k φ_·k θ_ki.
/// Returns -infinity if an observed count sits on a zero rate.
inline double poisson_loglik(const CountMatrix& x, const FactorState& s) {
    check_dimensions(x, s);
    double ll = 0.0;
    for (const auto& e : x.entries()) {
        const double rate = compose_rate(s, e.term, e.doc);
        if (!(rate > 0.0)) return -std::numeric_limits<double>::infinity();
        const auto c = static_cast<double>(e.count);
        ll += c * std::log(rate) - std::lgamma(c + 1.0);
    }
    const Eigen::RowVectorXd loading_mass = s.phi.colwise().sum();
    ll -= (loading_mass * s.theta).sum();
    return ll;
}

struct FactorCount {
    std::uint32_t factor;
    Count count;

    friend bool operator==(const FactorCount&, const FactorCount&) = default;
};

/**
 * Three-way latent counts x_pik, stored only for observed cells, plus their
 * marginals. Cell j of the allocation corresponds to entry j of the count
 * matrix it was drawn for.
 */
class LatentAllocation {
  public:
    LatentAllocation() = default;

    LatentAllocation(std::size_t terms, std::size_t factors, std::size_t docs)
        : doc_factor_(CountMat::Zero(static_cast<Eigen::Index>(factors), static_cast<Eigen::Index>(docs))),
          term_factor_(CountMat::Zero(static_cast<Eigen::Index>(terms), static_cast<Eigen::Index>(factors))),
          factor_total_(CountVec::Zero(static_cast<Eigen::Index>(factors))),
          doc_total_(CountVec::Zero(static_cast<Eigen::Index>(docs))), cell_begin_{0} {}

    std::size_t cells() const noexcept { return cell_begin_.size() - 1; }
    std::size_t factors() const noexcept { return static_cast<std::size_t>(factor_total_.size()); }

    /// Nonzero (factor, count) pairs of cell j, sorted by factor.
    std::span<const FactorCount> cell(std::size_t j) const noexcept {
        return std::span<const FactorCount>(pairs_).subspan(cell_begin_[j],
                                                            cell_begin_[j + 1] - cell_begin_[j]);
    }

    /// x_·ik, K x N.
    const CountMat& doc_factor() const noexcept { return doc_factor_; }
    /// x_p·k, P x K.
    const CountMat& term_factor() const noexcept { return term_factor_; }
    /// x_··k.
    const CountVec& factor_total() const noexcept { return factor_total_; }
    /// x_·i·.
    const CountVec& doc_total() const noexcept { return doc_total_; }

    std::size_t active_factors() const noexcept {
        return static_cast<std::size_t>((factor_total_.array() > 0).count());
    }

    /// Appends the next cell (cells must be appended in count-matrix order).
    void push_cell(std::span<const FactorCount> pairs) {
        pairs_.insert(pairs_.end(), pairs.begin(), pairs.end());
        cell_begin_.push_back(pairs_.size());
    }

    /// Recomputes all marginals from the three-way table.
    void rebuild_marginals(const CountMatrix& x) {
        doc_factor_.setZero();
        term_factor_.setZero();
        factor_total_.setZero();
        doc_total_.setZero();
        const auto entries = x.entries();
        for (std::size_t j = 0; j < cells(); ++j) {
            const auto& e = entries[j];
            for (const auto& fc : cell(j)) {
                doc_factor_(fc.factor, e.doc) += fc.count;
                term_factor_(e.term, fc.factor) += fc.count;
                factor_total_(fc.factor) += fc.count;
                doc_total_(e.doc) += fc.count;
            }
        }
    }

    /// Checks Σ_k x_pik = x_pi on every cell and that the cached marginals
    /// match a recomputation. Throws NumericError on any mismatch.
    void verify(const CountMatrix& x) const {
        if (cells() != x.nnz()) throw NumericError("allocation audit: cell count mismatch");
        const auto entries = x.entries();
        for (std::size_t j = 0; j < cells(); ++j) {
            Count sum = 0;
            for (const auto& fc : cell(j)) sum += fc.count;
            if (sum != entries[j].count)
                throw NumericError("allocation audit: cell (" + std::to_string(entries[j].term) +
                                   ", " + std::to_string(entries[j].doc) +
                                   ") is not conserved");
        }
        LatentAllocation fresh = *this;
        fresh.rebuild_marginals(x);
        if (fresh.doc_factor_ != doc_factor_ || fresh.term_factor_ != term_factor_ ||
            fresh.factor_total_ != factor_total_ || fresh.doc_total_ != doc_total_)
            throw NumericError("allocation audit: stale marginal cache");
    }

  private:
    CountMat doc_factor_;
    CountMat term_factor_;
    CountVec factor_total_;
    CountVec doc_total_;
    std::vector<FactorCount> pairs_;
    std::vector<std::size_t> cell_begin_{0};
};

/**
 * Splits every observed count over the K factors:
 * [x_pi1..x_piK] ~ Mult(x_pi; φ_pk θ_ki / Σ_k φ_pk θ_ki).
 *
 * Document i draws from rng.derive("alloc", i), so the result does not depend
 * on `threads`.
 */
inline LatentAllocation allocate_counts(const CountMatrix& x, const FactorState& s, RngStream& rng,
                                        unsigned threads = 1) {
    check_dimensions(x, s);
    const std::size_t k_count = s.factors();
    std::vector<std::vector<FactorCount>> per_doc(x.docs());

    parallel_for(x.docs(), threads, [&](std::size_t i) {
        RngStream doc_rng = rng.derive("alloc", i);
        std::vector<double> weights(k_count);
        std::vector<Count> draw(k_count);
        auto& out = per_doc[i];
        out.clear();
        const auto theta_i = s.theta.col(static_cast<Eigen::Index>(i));
        for (const auto& e : x.column(i)) {
            double total = 0.0;
            for (std::size_t k = 0; k < k_count; ++k) {
                weights[k] = s.phi(e.term, static_cast<Eigen::Index>(k)) * theta_i(static_cast<Eigen::Index>(k));
                total += weights[k];
            }
            if (!(total > 0.0) || !std::isfinite(total))
                throw DegeneracyError("zero Poisson rate at an observed count", e.term, e.doc);
            sample_multinomial_weights(e.count, weights, total, draw, doc_rng);
            for (std::size_t k = 0; k < k_count; ++k)
                if (draw[k] > 0) out.push_back({static_cast<std::uint32_t>(k), draw[k]});
        }
    });

    LatentAllocation alloc(x.terms(), k_count, x.docs());
    for (std::size_t i = 0; i < x.docs(); ++i) {
        const auto& pairs = per_doc[i];
        std::size_t pos = 0;
        for (const auto& e : x.column(i)) {
            const std::size_t begin = pos;
            Count seen = 0;
            while (seen < e.count) seen += pairs[pos++].count;
            alloc.push_cell(std::span<const FactorCount>(pairs).subspan(begin, pos - begin));
        }
    }
    alloc.rebuild_marginals(x);
    return alloc;
}

} // namespace bnbpfa
