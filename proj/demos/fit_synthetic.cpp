// Fits the beta-gamma-gamma-Poisson model with K_max = 50 to a corpus drawn
// from five true factors, then prints how many factors stay in use and the
// largest ones. With an export directory it also writes the corpus as
// docword.txt / vocab.txt for the command-line tool (see synthetic.cfg).
//
//   bnbpfa_demo [seed] [iterations] [export_dir]

#include "bnbpfa/bnbpfa.hpp"

#include <cstdio>
#include <cstdlib>

using namespace bnbpfa;

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
    const std::size_t iterations = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1500;

    RngStream rng(seed);
    RngStream truth_rng = rng.derive("truth");
    // r = 1, p = 10/11: about ten tokens per document from each factor
    const FactorState truth =
        synthetic_bgg_state(100, 200, std::vector<double>(5, 1.0), std::vector<double>(5, 10.0 / 11.0), 0.05, truth_rng);
    RngStream count_rng = rng.derive("counts");
    const CountMatrix x = sample_counts(truth, count_rng);
    if (argc > 3) {
        Corpus c{x, {}};
        for (std::size_t p = 0; p < x.terms(); ++p) c.vocab.push_back("w" + std::to_string(p));
        std::filesystem::create_directories(argv[3]);
        export_bow(c, std::filesystem::path(argv[3]) / "docword.txt", std::filesystem::path(argv[3]) / "vocab.txt");
    }
    std::printf("corpus: %zu terms, %zu docs, %lld tokens\n", x.terms(), x.docs(), static_cast<long long>(x.total()));

    RngStream split_rng = rng.derive("split");
    const SplitPair sp = split_counts(x, 0.8, split_rng);

    HyperParams h;
    h.K = 50;
    ChainConfig cfg;
    cfg.n_iterations = iterations;
    cfg.burn_in = iterations / 2;
    cfg.thin = 5;

    PerplexityAccumulator acc(sp.test);
    ChainObserver obs;
    obs.keep_samples = false;
    obs.on_sample = [&](std::size_t, const FactorState& s, const FactorTotals&) { acc.add(s); };
    RngStream chain_rng = rng.derive("chain");
    const ChainResult res = run_chain(sp.train, h, cfg, chain_rng, obs);

    for (const auto& t : res.trace)
        if (t.iteration % (iterations / 10) == 0)
            std::printf("iter %5zu  loglik %12.2f  active %2zu\n", t.iteration, t.loglik, t.n_active);

    const FactorReport report = factor_report(res.last_state, res.last_factor_totals, 5);
    std::printf("active factors at the last iteration: %zu of %zu\n", report.active_count(), h.K);
    std::printf("held-out perplexity: %.3f (uniform: %zu)\n", acc.result().perplexity, x.terms());
    std::printf("rank factor  count     r      p   top terms\n");
    for (const auto& row : report.rows) {
        if (!row.active) break;
        std::printf("%4zu %6zu %6lld %6.3f %6.3f  ", row.rank, row.factor_id, static_cast<long long>(row.count),
                    row.r.value_or(0.0), row.p.value_or(0.0));
        for (std::size_t t : row.top_terms) std::printf("%zu ", t);
        std::printf("\n");
    }
    return 0;
}
