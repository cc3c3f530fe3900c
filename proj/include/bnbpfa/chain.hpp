#pragma once

#include "bnbpfa/count_matrix.hpp"
#include "bnbpfa/error.hpp"
#include "bnbpfa/hyper.hpp"
#include "bnbpfa/pfa_model.hpp"
#include "bnbpfa/r_update.hpp"
#include "bnbpfa/rng.hpp"
#include "bnbpfa/samplers.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace bnbpfa {

struct TraceRow {
    std::size_t iteration;
    double loglik;
    std::size_t n_active;
    std::size_t mh_proposed;
    std::size_t mh_accepted;

    /// NaN when the sweep made no MH proposals.
    double mh_accept_rate() const {
        return mh_proposed == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : static_cast<double>(mh_accepted) / static_cast<double>(mh_proposed);
    }
};

/// Per-factor totals x_··k (or, for EM, expected totals rounded down).
using FactorTotals = std::vector<Count>;

struct ChainResult {
    std::vector<FactorState> samples;
    std::vector<std::size_t> sample_iterations;
    std::vector<TraceRow> trace;
    MhDiagnostics diagnostics;
    FactorState last_state;
    LatentAllocation last_allocation; ///< empty for GAMMA_EM
    FactorTotals last_factor_totals;
};

struct ChainObserver {
    /// Called for every collected sweep with the iteration index, the state
    /// and the factor totals of that sweep.
    std::function<void(std::size_t, const FactorState&, const FactorTotals&)> on_sample;
    /// Keep collected states in ChainResult::samples.
    bool keep_samples = true;
};

/**
 * Runs a full chain: initialization, burn-in with MH step-size adaptation,
 * then collection of every `thin`-th sweep.
 *
 * Sweep t draws from rng.derive("sweep", t); initialization from
 * rng.derive("init"). Errors are rethrown with the iteration index.
 */
inline ChainResult run_chain(const CountMatrix& x, const HyperParams& h, const ChainConfig& cfg, RngStream& rng,
                             const ChainObserver& observer = {}) {
    cfg.validate();
    h.validate(cfg.variant);
    if (x.total() == 0) throw ValidationError("run_chain: count matrix has no counts");

    RngStream init_rng = rng.derive("init");
    FactorState state = init_state(cfg.variant, x.terms(), x.docs(), h, init_rng);
    LatentAllocation alloc;
    MhDiagnostics diag(h.K, cfg.mh_stepsize);
    ChainResult result;
    result.trace.reserve(cfg.n_iterations);
    FactorTotals totals(h.K, 0);
    if (cfg.burn_in == 0) diag.reset_totals();

    for (std::size_t t = 1; t <= cfg.n_iterations; ++t) {
        RngStream sweep = rng.derive("sweep", t);
        diag.begin_sweep();
        std::size_t active = 0;
        try {
            switch (cfg.variant) {
            case Variant::BGG:
                step_bgg(x, state, alloc, h, cfg, diag, sweep);
                break;
            case Variant::SGG:
                step_sgg(x, state, alloc, h, cfg, diag, sweep);
                break;
            case Variant::BG:
                step_bg(x, state, alloc, h, cfg, sweep);
                break;
            case Variant::DIR:
                step_dir(x, state, alloc, h, cfg, sweep);
                break;
            case Variant::GAMMA_GIBBS:
                step_gamma_gibbs(x, state, alloc, h, cfg, sweep);
                break;
            case Variant::GAMMA_EM: {
                const EmStepInfo info = step_gamma_em(x, state, h);
                for (std::size_t k = 0; k < h.K; ++k) {
                    const double e = info.expected_factor_total(static_cast<Eigen::Index>(k));
                    totals[k] = static_cast<Count>(std::floor(e + 0.5));
                }
                break;
            }
            }
            if (cfg.variant != Variant::GAMMA_EM) {
                if (cfg.audit) alloc.verify(x);
                for (std::size_t k = 0; k < h.K; ++k) totals[k] = alloc.factor_total()(static_cast<Eigen::Index>(k));
            }
        } catch (const DegeneracyError& e) {
            throw DegeneracyError(std::string("iteration ") + std::to_string(t) + ": zero Poisson rate at an observed count",
                                  e.term(), e.doc());
        } catch (const DomainError& e) {
            throw DomainError("iteration " + std::to_string(t) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("iteration " + std::to_string(t) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("iteration " + std::to_string(t) + ": " + e.what());
        }
        for (Count c : totals) active += c > 0 ? 1 : 0;

        result.trace.push_back({t, poisson_loglik(x, state), active, diag.sweep_proposed, diag.sweep_accepted});

        if (cfg.adapt && t <= cfg.burn_in && t % cfg.mh_adapt_window == 0)
            diag.adapt(cfg.accept_low, cfg.accept_high);
        if (t == cfg.burn_in) {
            if (cfg.adapt) diag.share_unadapted();
            diag.reset_totals();
        }

        if (cfg.collects(t)) {
            if (observer.on_sample) observer.on_sample(t, state, totals);
            if (observer.keep_samples) {
                result.samples.push_back(state);
                result.sample_iterations.push_back(t);
            }
        }
    }
    result.diagnostics = std::move(diag);
    result.last_state = std::move(state);
    result.last_allocation = std::move(alloc);
    result.last_factor_totals = std::move(totals);
    return result;
}

} // namespace bnbpfa
