#pragma once

#include "bnbpfa/count_matrix.hpp"
#include "bnbpfa/error.hpp"
#include "bnbpfa/pfa_model.hpp"
#include "bnbpfa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace bnbpfa {

struct SplitPair {
    CountMatrix train;
    CountMatrix test;
    std::uint64_t seed = 0;
    double ratio = 0.8;
};

/**
 * Word-level holdout. Each document keeps round(ratio · x_·i·) of its tokens
 * for training, chosen uniformly without replacement over token positions
 * (selection sampling); the rest form the test matrix, so train + test = X.
 */
inline SplitPair split_counts(const CountMatrix& x, double ratio, RngStream& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("split_counts: ratio must lie in (0, 1)");
    if (x.total() == 0) throw ValidationError("split_counts: count matrix is empty");
    std::vector<CountEntry> train;
    std::vector<CountEntry> test;
    for (std::size_t i = 0; i < x.docs(); ++i) {
        Count remaining = x.doc_total(i);
        Count to_keep = std::llround(ratio * static_cast<double>(remaining));
        for (const auto& e : x.column(i)) {
            Count kept = 0;
            for (Count t = 0; t < e.count; ++t) {
                if (rng.uniform() * static_cast<double>(remaining) < static_cast<double>(to_keep)) {
                    ++kept;
                    --to_keep;
                }
                --remaining;
            }
            if (kept > 0) train.push_back({e.term, e.doc, kept});
            if (e.count - kept > 0) test.push_back({e.term, e.doc, e.count - kept});
        }
    }
    return {CountMatrix(x.terms(), x.docs(), std::move(train)),
            CountMatrix(x.terms(), x.docs(), std::move(test)), rng.key(), ratio};
}

struct PerplexityResult {
    double perplexity;
    double log_likelihood; ///< Σ y_pi ln(predictive probability)
    Count tokens;          ///< y_··
    std::optional<CountEntry> zero_mass_cell;
};

/**
 * Held-out per-word perplexity accumulated over posterior samples:
 *
 *   exp(-(1/y_··) Σ_{p,i} y_pi ln[Σ_s Σ_k φˢ_pk θˢ_ki / Σ_s Σ_p Σ_k φˢ_pk θˢ_ki])
 *
 * The denominator runs over s, p and k for the document i of the cell, so
 * each document's predictive distribution is normalized on its own.
 */
class PerplexityAccumulator {
  public:
    explicit PerplexityAccumulator(const CountMatrix& test)
        : test_(&test), numer_(test.nnz(), 0.0), denom_(test.docs(), 0.0) {
        if (test.total() == 0) throw ValidationError("perplexity: test matrix has no tokens");
    }

    void add(const FactorState& s) {
        check_dimensions(*test_, s);
        const auto entries = test_->entries();
        for (std::size_t j = 0; j < entries.size(); ++j)
            numer_[j] += compose_rate(s, entries[j].term, entries[j].doc);
        const Eigen::RowVectorXd mass = s.phi.colwise().sum() * s.theta;
        for (std::size_t i = 0; i < denom_.size(); ++i) denom_[i] += mass(static_cast<Eigen::Index>(i));
        ++samples_;
    }

    std::size_t samples() const noexcept { return samples_; }

    PerplexityResult result() const {
        if (samples_ == 0) throw ValidationError("perplexity: no samples collected");
        PerplexityResult out{0.0, 0.0, test_->total(), std::nullopt};
        const auto entries = test_->entries();
        for (std::size_t j = 0; j < entries.size(); ++j) {
            const double prob = numer_[j] / denom_[entries[j].doc];
            if (!(prob > 0.0)) {
                out.zero_mass_cell = entries[j];
                out.log_likelihood = -std::numeric_limits<double>::infinity();
                out.perplexity = std::numeric_limits<double>::infinity();
                return out;
            }
            out.log_likelihood += static_cast<double>(entries[j].count) * std::log(prob);
        }
        out.perplexity = std::exp(-out.log_likelihood / static_cast<double>(out.tokens));
        return out;
    }

  private:
    const CountMatrix* test_;
    std::vector<double> numer_;
    std::vector<double> denom_;
    std::size_t samples_ = 0;
};

inline PerplexityResult perplexity(const std::vector<FactorState>& samples, const CountMatrix& test) {
    if (samples.empty()) throw ValidationError("perplexity: need at least one sample");
    PerplexityAccumulator acc(test);
    for (const auto& s : samples) acc.add(s);
    return acc.result();
}

/// State whose every loading column is uniform over the P terms.
inline FactorState uniform_predictor(std::size_t terms, std::size_t docs, std::size_t factors = 1) {
    FactorState s;
    s.phi = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(terms), static_cast<Eigen::Index>(factors),
                                      1.0 / static_cast<double>(terms));
    s.theta = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(factors), static_cast<Eigen::Index>(docs));
    return s;
}

struct FactorRow {
    std::size_t rank;
    std::size_t factor_id;
    Count count;
    std::optional<double> mean; ///< r p / (1 - p)
    std::optional<double> vmr;  ///< 1 / (1 - p)
    std::optional<double> r;
    std::optional<double> p;
    std::vector<std::size_t> top_terms;
    bool active;
};

struct FactorReport {
    std::vector<FactorRow> rows;

    std::size_t active_count() const {
        return static_cast<std::size_t>(
            std::count_if(rows.begin(), rows.end(), [](const FactorRow& r) { return r.active; }));
    }
};

/// Factors sorted by descending assigned count (ties by factor index) with
/// their negative binomial mean and VMR and their top-M terms by φ_pk.
inline FactorReport factor_report(const FactorState& s, const std::vector<Count>& factor_totals,
                                  std::size_t top_m) {
    const std::size_t k_count = s.factors();
    if (factor_totals.size() != k_count) throw ValidationError("factor_report: totals size mismatch");
    std::vector<std::size_t> order(k_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return factor_totals[a] > factor_totals[b]; });

    FactorReport report;
    report.rows.reserve(k_count);
    const std::size_t m = std::min(top_m, s.terms());
    for (std::size_t rank = 0; rank < k_count; ++rank) {
        const std::size_t k = order[rank];
        const auto kk = static_cast<Eigen::Index>(k);
        FactorRow row{rank + 1, k, factor_totals[k], std::nullopt, std::nullopt, std::nullopt, std::nullopt, {},
                      factor_totals[k] > 0};
        if (s.has_nb_params()) {
            const double p = s.p(kk);
            const double r = s.r(kk);
            row.p = p;
            row.r = r;
            row.vmr = 1.0 / (1.0 - p);
            row.mean = r * p / (1.0 - p);
        }
        std::vector<std::size_t> terms(s.terms());
        std::iota(terms.begin(), terms.end(), std::size_t{0});
        std::partial_sort(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(m), terms.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double pa = s.phi(static_cast<Eigen::Index>(a), kk);
                              const double pb = s.phi(static_cast<Eigen::Index>(b), kk);
                              return pa != pb ? pa > pb : a < b;
                          });
        row.top_terms.assign(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(m));
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline FactorReport factor_report(const FactorState& s, const LatentAllocation& a, std::size_t top_m) {
    const auto& tot = a.factor_total();
    return factor_report(s, std::vector<Count>(tot.data(), tot.data() + tot.size()), top_m);
}

} // namespace bnbpfa
