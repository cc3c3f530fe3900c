#include "test_support.hpp"

#include <boost/math/special_functions/binomial.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace bnbpfa;

namespace {

CountMatrix random_counts(std::uint64_t seed, std::size_t terms, std::size_t docs) {
    RngStream rng(seed);
    std::vector<CountEntry> t;
    for (std::uint32_t i = 0; i < docs; ++i)
        for (std::uint32_t p = 0; p < terms; ++p)
            if (rng.uniform() < 0.3) t.push_back({p, i, sample_poisson(3.0, rng) + 1});
    return CountMatrix(terms, docs, t);
}

FactorState two_term_state(double p0) {
    FactorState s;
    s.phi.resize(2, 1);
    s.phi << p0, 1.0 - p0;
    s.theta = Eigen::MatrixXd::Constant(1, 1, 7.0);
    return s;
}

} // namespace

TEST(SplitCounts, TrainPlusTestIsX) {
    const auto x = random_counts(1, 40, 30);
    RngStream rng(2);
    const auto sp = split_counts(x, 0.8, rng);
    for (std::size_t i = 0; i < x.docs(); ++i) {
        for (std::size_t p = 0; p < x.terms(); ++p) {
            ASSERT_GE(sp.train.at(p, i), 0);
            ASSERT_GE(sp.test.at(p, i), 0);
            ASSERT_EQ(sp.train.at(p, i) + sp.test.at(p, i), x.at(p, i));
        }
        EXPECT_EQ(sp.train.doc_total(i), std::llround(0.8 * static_cast<double>(x.doc_total(i))));
        EXPECT_EQ(sp.train.doc_total(i) + sp.test.doc_total(i), x.doc_total(i));
    }
    EXPECT_EQ(sp.ratio, 0.8);
}

TEST(SplitCounts, RatioNearOneLeavesNoTest) {
    const auto x = random_counts(3, 20, 10);
    RngStream rng(4);
    const auto sp = split_counts(x, 1.0 - 1e-12, rng);
    EXPECT_EQ(sp.test.total(), 0);
    EXPECT_EQ(sp.train, x);
}

TEST(SplitCounts, Errors) {
    const auto x = random_counts(5, 5, 5);
    RngStream rng(6);
    EXPECT_THROW(split_counts(x, 0.0, rng), DomainError);
    EXPECT_THROW(split_counts(x, 1.0, rng), DomainError);
    EXPECT_THROW(split_counts(x, 1.5, rng), DomainError);
    EXPECT_THROW(split_counts(CountMatrix(3, 3, {}), 0.5, rng), ValidationError);
}

TEST(SplitCounts, HypergeometricMarginal) {
    // Ten tokens: term 0 three times, term 1 five times, term 2 twice; keep 8.
    const CountMatrix x(3, 1, {{0, 0, 3}, {1, 0, 5}, {2, 0, 2}});
    const int reps = 10000;
    const Count sizes[3] = {3, 5, 2};
    std::vector<std::vector<double>> freq(3, std::vector<double>(6, 0.0));
    RngStream rng(7);
    for (int j = 0; j < reps; ++j) {
        const auto sp = split_counts(x, 0.8, rng);
        ASSERT_EQ(sp.train.total(), 8);
        for (std::size_t p = 0; p < 3; ++p) freq[p][static_cast<std::size_t>(sp.train.at(p, 0))] += 1;
    }
    using boost::math::binomial_coefficient;
    for (std::size_t p = 0; p < 3; ++p)
        for (Count k = 0; k <= sizes[p]; ++k) {
            const Count rest = 10 - sizes[p];
            double prob = 0.0;
            if (8 - k >= 0 && 8 - k <= rest)
                prob = binomial_coefficient<double>(static_cast<unsigned>(sizes[p]), static_cast<unsigned>(k)) *
                       binomial_coefficient<double>(static_cast<unsigned>(rest), static_cast<unsigned>(8 - k)) /
                       binomial_coefficient<double>(10, 8);
            const double f = freq[p][static_cast<std::size_t>(k)] / reps;
            EXPECT_NEAR(f, prob, 3.0 * std::sqrt(prob * (1 - prob) / reps) + 1e-12) << p << " " << k;
        }
}

TEST(SplitCounts, SameSeedSameSplit) {
    const auto x = random_counts(8, 30, 20);
    RngStream a(9), b(9);
    EXPECT_EQ(split_counts(x, 0.7, a).train, split_counts(x, 0.7, b).train);
}

TEST(Perplexity, TwoTermOracle) {
    const CountMatrix test(2, 1, {{0, 0, 1}, {1, 0, 1}});
    const auto r = perplexity({two_term_state(0.9)}, test);
    EXPECT_NEAR(r.perplexity, std::exp(-0.5 * (std::log(0.9) + std::log(0.1))), 1e-12);
    EXPECT_NEAR(r.perplexity, 3.3333, 1e-4);
    EXPECT_EQ(r.tokens, 2);
}

TEST(Perplexity, UniformPredictorGivesVocabularySize) {
    const auto test = random_counts(10, 37, 12);
    const auto u = uniform_predictor(37, 12, 3);
    EXPECT_NEAR(perplexity({u}, test).perplexity, 37.0, 1e-10);
    // any θ
    auto v = u;
    RngStream rng(11);
    for (Eigen::Index j = 0; j < v.theta.size(); ++j) v.theta.data()[j] = 0.1 + rng.uniform();
    EXPECT_NEAR(perplexity({v, u}, test).perplexity, 37.0, 1e-10);
}

TEST(Perplexity, BeatsUniformOnLikelyToken) {
    const CountMatrix test(2, 1, {{0, 0, 1}});
    EXPECT_LT(perplexity({two_term_state(0.9)}, test).perplexity, 2.0);
}

TEST(Perplexity, FactorRelabelingInvariant) {
    const auto test = random_counts(12, 25, 10);
    RngStream rng(13);
    HyperParams h;
    h.K = 6;
    auto s = init_state(Variant::BGG, 25, 10, h, rng);
    FactorState t = s;
    const std::vector<int> perm = {3, 0, 5, 1, 4, 2};
    for (int k = 0; k < 6; ++k) {
        t.phi.col(k) = s.phi.col(perm[static_cast<std::size_t>(k)]);
        t.theta.row(k) = s.theta.row(perm[static_cast<std::size_t>(k)]);
    }
    EXPECT_NEAR(perplexity({s}, test).perplexity, perplexity({t}, test).perplexity, 1e-10);
}

TEST(Perplexity, ZeroMassIsInfiniteWithCell) {
    FactorState s;
    s.phi.resize(3, 1);
    s.phi << 0.5, 0.5, 0.0;
    s.theta = Eigen::MatrixXd::Constant(1, 2, 1.0);
    const CountMatrix test(3, 2, {{0, 0, 1}, {2, 1, 4}});
    const auto r = perplexity({s}, test);
    EXPECT_TRUE(std::isinf(r.perplexity));
    ASSERT_TRUE(r.zero_mass_cell.has_value());
    EXPECT_EQ(r.zero_mass_cell->term, 2u);
    EXPECT_EQ(r.zero_mass_cell->doc, 1u);
}

TEST(Perplexity, Errors) {
    EXPECT_THROW(perplexity({}, CountMatrix(2, 1, {{0, 0, 1}})), ValidationError);
    EXPECT_THROW(PerplexityAccumulator(CountMatrix(2, 1, {})), ValidationError);
    PerplexityAccumulator acc(CountMatrix(2, 1, {{0, 0, 1}}));
    EXPECT_THROW(acc.result(), ValidationError);
    EXPECT_THROW(acc.add(uniform_predictor(3, 1)), ValidationError);
}

TEST(Perplexity, AveragingSamplesDoesNotHurt) {
    const auto syn = bnbpfa::testing::five_factor_corpus(3, 60, 80);
    RngStream srng(14);
    const auto sp = split_counts(syn.counts, 0.8, srng);
    HyperParams h;
    h.K = 20;
    ChainConfig cfg;
    cfg.n_iterations = 600;
    cfg.burn_in = 300;
    cfg.thin = 3;
    RngStream rng(15);
    const auto res = run_chain(sp.train, h, cfg, rng);
    double single = 0.0;
    for (const auto& s : res.samples) single += std::log(perplexity({s}, sp.test).perplexity);
    single = std::exp(single / static_cast<double>(res.samples.size()));
    const double pooled = perplexity(res.samples, sp.test).perplexity;
    EXPECT_LE(pooled, single * 1.001);
    EXPECT_LT(pooled, 60.0);

    PerplexityAccumulator acc(sp.test);
    for (const auto& s : res.samples) acc.add(s);
    EXPECT_EQ(acc.samples(), res.samples.size());
    EXPECT_DOUBLE_EQ(acc.result().perplexity, pooled);
}

TEST(FactorReport, NegativeBinomialSummaries) {
    FactorState s;
    s.phi.resize(3, 2);
    s.phi << 0.2, 0.1, 0.7, 0.3, 0.1, 0.6;
    s.theta = Eigen::MatrixXd::Ones(2, 1);
    s.p.resize(2);
    s.p << 0.5, 0.9;
    s.r.resize(2);
    s.r << 2.0, 1.0;
    const auto rep = factor_report(s, std::vector<Count>{4, 9}, 2);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[0].factor_id, 1u);
    EXPECT_EQ(rep.rows[0].rank, 1u);
    EXPECT_EQ(rep.rows[1].factor_id, 0u);
    EXPECT_EQ(*rep.rows[1].vmr, 2.0);
    EXPECT_DOUBLE_EQ(*rep.rows[1].mean, 2.0);
    EXPECT_NEAR(*rep.rows[0].vmr, 10.0, 1e-12);
    EXPECT_EQ(rep.rows[0].top_terms, (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(rep.rows[1].top_terms, (std::vector<std::size_t>{1, 0}));
    EXPECT_EQ(rep.active_count(), 2u);
    for (const auto& row : rep.rows) {
        EXPECT_GE(*row.vmr, 1.0);
        EXPECT_GE(*row.mean, 0.0);
    }
}

TEST(FactorReport, ZeroAllocationHasNoActiveFactors) {
    RngStream rng(16);
    HyperParams h;
    h.K = 5;
    const auto s = init_state(Variant::DIR, 8, 3, h, rng);
    const auto rep = factor_report(s, std::vector<Count>(5, 0), 3);
    EXPECT_EQ(rep.active_count(), 0u);
    for (const auto& row : rep.rows) {
        EXPECT_FALSE(row.vmr.has_value());
        EXPECT_EQ(row.top_terms.size(), 3u);
    }
    EXPECT_THROW(factor_report(s, std::vector<Count>(4, 0), 3), ValidationError);
}

TEST(FactorReport, OrderingIsPermutation) {
    const auto x = random_counts(17, 20, 10);
    RngStream rng(18);
    HyperParams h;
    h.K = 12;
    auto s = init_state(Variant::BGG, 20, 10, h, rng);
    const auto a = allocate_counts(x, s, rng);
    const auto rep = factor_report(s, a, 50);
    std::set<std::size_t> ids;
    Count prev = std::numeric_limits<Count>::max();
    for (const auto& row : rep.rows) {
        ids.insert(row.factor_id);
        EXPECT_LE(row.count, prev);
        prev = row.count;
        EXPECT_EQ(row.active, a.factor_total()(static_cast<Eigen::Index>(row.factor_id)) > 0);
        EXPECT_EQ(row.top_terms.size(), 20u);
    }
    EXPECT_EQ(ids.size(), 12u);
    EXPECT_EQ(rep.active_count(), a.active_factors());
}
