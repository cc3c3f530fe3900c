#pragma once

// Command layer behind the bnbpfa executable: fit, eval, simulate, report.

#include "bnbpfa/bnb_process.hpp"
#include "bnbpfa/chain.hpp"
#include "bnbpfa/config.hpp"
#include "bnbpfa/corpus_io.hpp"
#include "bnbpfa/csv.hpp"
#include "bnbpfa/error.hpp"
#include "bnbpfa/evaluation.hpp"
#include "bnbpfa/parallel.hpp"
#include "bnbpfa/state_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef BNBPFA_VERSION
#define BNBPFA_VERSION "0.1.0"
#endif

namespace bnbpfa {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

inline const char* version_string() { return BNBPFA_VERSION; }

namespace detail {

inline void write_run_metadata(const fs::path& dir, const ExperimentConfig& cfg, const std::string& command) {
    fs::create_directories(dir);
    write_file_atomic(dir / "config.txt", config_text(cfg));
    nlohmann::json meta;
    meta["command"] = command;
    meta["seed"] = cfg.seed;
    meta["version"] = version_string();
    meta["variant"] = std::string(to_string(cfg.variant));
    meta["threads"] = cfg.chain.threads;
    write_file_atomic(dir / "run.json", meta.dump(1) + "\n");
}

inline std::string trace_csv(const std::vector<TraceRow>& trace) {
    CsvWriter w({"iteration", "loglik", "n_active_factors", "mh_accept_rate"});
    for (const auto& t : trace) w.row(t.iteration, t.loglik, t.n_active, t.mh_accept_rate());
    return w.str();
}

inline std::string term_label(const std::vector<std::string>& vocab, std::size_t p) {
    return p < vocab.size() ? vocab[p] : std::to_string(p);
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

inline std::string factor_report_csv(const FactorReport& report, const std::vector<std::string>& vocab) {
    CsvWriter w({"factor_rank", "factor_id", "count", "mean", "vmr", "top_terms"});
    for (const auto& row : report.rows) {
        std::string terms;
        for (std::size_t j = 0; j < row.top_terms.size(); ++j) {
            if (j) terms += ' ';
            terms += term_label(vocab, row.top_terms[j]);
        }
        w.row(row.rank, row.factor_id, row.count, optional_number(row.mean), optional_number(row.vmr), terms);
    }
    return w.str();
}

/// Per-factor negative binomial parameters, the data behind the r_k / p_k panels.
inline std::string factor_params_csv(const FactorReport& report) {
    CsvWriter w({"factor_rank", "factor_id", "count", "r", "p", "active"});
    for (const auto& row : report.rows)
        w.row(row.rank, row.factor_id, row.count, optional_number(row.r), optional_number(row.p), row.active);
    return w.str();
}

inline std::string mh_csv(const MhDiagnostics& d) {
    CsvWriter w({"factor_id", "mu", "proposed", "accepted", "acceptance_rate"});
    for (std::size_t k = 0; k < d.factors(); ++k)
        w.row(k, d.mu[k], d.proposed[k], d.accepted[k], d.acceptance_rate(k));
    return w.str();
}

inline std::string snapshot_name(std::size_t iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "iter_%07zu.json", iteration);
    return buf;
}

inline Corpus load_corpus(const ExperimentConfig& cfg) {
    return ingest_bow(cfg.docword, cfg.vocab, cfg.min_doc_freq, cfg.header);
}

} // namespace detail

struct FitSummary {
    std::size_t iterations;
    std::size_t samples;
    std::size_t active_factors;
    fs::path run_dir;
};

/**
 * Fits the configured variant on the whole corpus and writes
 * config.txt, run.json, trace.csv, factors.csv, factor_params.csv,
 * mh_diagnostics.csv and snapshots/ under output_dir.
 */
inline FitSummary cmd_fit(const ExperimentConfig& cfg) {
    validate_config(cfg, true);
    const Corpus corpus = detail::load_corpus(cfg);
    const fs::path dir = cfg.output_dir;
    detail::write_run_metadata(dir, cfg, "fit");
    fs::create_directories(dir / "snapshots");

    ChainConfig chain = cfg.chain;
    chain.variant = cfg.variant;
    RngStream rng(cfg.seed);
    std::size_t collected = 0;
    ChainObserver obs;
    obs.keep_samples = false;
    obs.on_sample = [&](std::size_t t, const FactorState& s, const FactorTotals& totals) {
        ++collected;
        if (cfg.snapshot_every > 0 && collected % cfg.snapshot_every == 0) {
            Snapshot snap{cfg.variant, t, cfg.seed, cfg.hyper, s, totals};
            write_file_atomic(dir / "snapshots" / detail::snapshot_name(t), snapshot_text(snap));
        }
    };
    const ChainResult res = run_chain(corpus.counts, cfg.hyper, chain, rng, obs);

    write_file_atomic(dir / "trace.csv", detail::trace_csv(res.trace));
    Snapshot final_snap{cfg.variant, cfg.chain.n_iterations, cfg.seed, cfg.hyper, res.last_state,
                        res.last_factor_totals};
    write_file_atomic(dir / "snapshots" / "final.json", snapshot_text(final_snap));
    const FactorReport report = factor_report(res.last_state, res.last_factor_totals, cfg.top_m);
    write_file_atomic(dir / "factors.csv", detail::factor_report_csv(report, corpus.vocab));
    write_file_atomic(dir / "factor_params.csv", detail::factor_params_csv(report));
    if (cfg.variant == Variant::BGG || cfg.variant == Variant::SGG)
        write_file_atomic(dir / "mh_diagnostics.csv", detail::mh_csv(res.diagnostics));
    return {cfg.chain.n_iterations, collected, report.active_count(), dir};
}

struct EvalRow {
    Variant variant;
    double a_phi;
    std::size_t K;
    std::size_t split_id;
    double perplexity;
    std::size_t active_factors;
    std::optional<FactorReport> report; ///< first split of nonparametric variants
};

struct EvalSummary {
    std::vector<EvalRow> rows;
    std::vector<double> uniform; ///< uniform-predictor perplexity per split
    fs::path run_dir;
};

/// Fits one training matrix and scores the held-out matrix.
inline EvalRow evaluate_split(const SplitPair& split, Variant v, const HyperParams& h, ChainConfig chain,
                              RngStream rng, std::size_t split_id, std::size_t top_m = 10) {
    chain.variant = v;
    PerplexityAccumulator acc(split.test);
    ChainObserver obs;
    obs.keep_samples = false;
    if (v != Variant::GAMMA_EM) obs.on_sample = [&](std::size_t, const FactorState& s, const FactorTotals&) { acc.add(s); };
    const ChainResult res = run_chain(split.train, h, chain, rng, obs);
    if (v == Variant::GAMMA_EM) acc.add(res.last_state);
    std::size_t active = 0;
    for (Count c : res.last_factor_totals) active += c > 0 ? 1 : 0;
    EvalRow row{v, h.a_phi_for(v), h.K, split_id, acc.result().perplexity, active, std::nullopt};
    if (split_id == 0 && is_nonparametric(v)) row.report = factor_report(res.last_state, res.last_factor_totals, top_m);
    return row;
}

/**
 * Held-out evaluation: `replicates` random word-level splits, each fitted
 * with every configured variant, a_φ and K. Writes perplexity.csv (one row
 * per split plus a mean row per setting), baseline.csv with the uniform
 * predictor and active_factors.csv.
 */
inline EvalSummary cmd_eval(const ExperimentConfig& cfg) {
    validate_config(cfg, true);
    const Corpus corpus = detail::load_corpus(cfg);
    const fs::path dir = cfg.output_dir;
    detail::write_run_metadata(dir, cfg, "eval");
    fs::create_directories(dir / "factors");

    const RngStream master(cfg.seed);
    std::vector<SplitPair> splits;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        RngStream srng = master.derive("split", r);
        splits.push_back(split_counts(corpus.counts, cfg.split_ratio, srng));
    }

    struct Setting {
        Variant v;
        HyperParams h;
    };
    std::vector<Setting> settings;
    const auto a_grid = cfg.a_phi_grid;
    const auto k_grid = cfg.k_grid.empty() ? std::vector<std::size_t>{cfg.hyper.K} : cfg.k_grid;
    for (Variant v : cfg.variants_for_eval()) {
        for (std::size_t k : k_grid) {
            HyperParams h = cfg.hyper;
            h.K = k;
            if (cfg.k_grid.size() > 0 && !cfg.hyper.eps) h.eps.reset();
            // the a_φ grid sweeps the Dirichlet loading prior; gamma loadings keep theirs
            if (a_grid.empty() || is_gamma_variant(v)) {
                settings.push_back({v, h});
            } else {
                for (double a : a_grid) {
                    h.a_phi = a;
                    settings.push_back({v, h});
                }
            }
        }
    }
    for (const auto& s : settings) s.h.validate(s.v);

    EvalSummary out;
    out.run_dir = dir;
    out.rows.resize(settings.size() * cfg.replicates);
    ChainConfig chain = cfg.chain;
    const unsigned workers = chain.threads;
    chain.threads = 1;
    // Each (setting, split) task draws from its own substream, so the table
    // does not depend on the number of workers.
    parallel_for(out.rows.size(), workers, [&](std::size_t task) {
        const std::size_t si = task / cfg.replicates;
        const std::size_t r = task % cfg.replicates;
        const RngStream fit_rng = master.derive("fit", r).derive(to_string(settings[si].v), si);
        out.rows[task] = evaluate_split(splits[r], settings[si].v, settings[si].h, chain, fit_rng, r, cfg.top_m);
    });

    CsvWriter table({"variant", "a_phi", "K_or_Kmax", "split_id", "perplexity"});
    CsvWriter active({"variant", "a_phi", "K_or_Kmax", "split_id", "active_factors"});
    for (std::size_t si = 0; si < settings.size(); ++si) {
        double sum = 0.0, active_sum = 0.0;
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            const auto& row = out.rows[si * cfg.replicates + r];
            const std::string name(to_string(row.variant));
            table.row(name, row.a_phi, row.K, std::to_string(r), row.perplexity);
            active.row(name, row.a_phi, row.K, std::to_string(r), row.active_factors);
            sum += row.perplexity;
            active_sum += static_cast<double>(row.active_factors);
        }
        const auto& first = out.rows[si * cfg.replicates];
        const std::string name(to_string(first.variant));
        const double n = static_cast<double>(cfg.replicates);
        table.row(name, first.a_phi, first.K, std::string("mean"), sum / n);
        active.row(name, first.a_phi, first.K, std::string("mean"), active_sum / n);
    }
    write_file_atomic(dir / "perplexity.csv", table.str());
    write_file_atomic(dir / "active_factors.csv", active.str());

    CsvWriter baseline({"variant", "a_phi", "K_or_Kmax", "split_id", "perplexity"});
    double usum = 0.0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        const FactorState u = uniform_predictor(corpus.counts.terms(), corpus.counts.docs());
        const double v = perplexity({u}, splits[r].test).perplexity;
        out.uniform.push_back(v);
        usum += v;
        baseline.row(std::string("UNIFORM"), std::string(""), std::string(""), std::to_string(r), v);
    }
    baseline.row(std::string("UNIFORM"), std::string(""), std::string(""), std::string("mean"),
                 usum / static_cast<double>(cfg.replicates));
    write_file_atomic(dir / "baseline.csv", baseline.str());

    // Factor statistics of the first split for each nonparametric setting.
    for (std::size_t si = 0; si < settings.size(); ++si) {
        const auto& row = out.rows[si * cfg.replicates];
        if (!row.report) continue;
        const std::string stem = std::string(to_string(row.variant)) + "_aphi" + format_number(row.a_phi) + "_K" +
                                 std::to_string(row.K);
        write_file_atomic(dir / "factors" / (stem + ".csv"), detail::factor_report_csv(*row.report, corpus.vocab));
        write_file_atomic(dir / "factors" / (stem + "_params.csv"), detail::factor_params_csv(*row.report));
    }
    return out;
}

struct SimulateSummary {
    std::size_t rows;
    fs::path run_dir;
};

/**
 * msIBP simulation: `sim_replicates` independent draws of `n_customers`
 * customers. msibp_summary.csv has one row per customer per replicate;
 * msibp_counts.csv lists every positive (customer, atom) count.
 */
inline SimulateSummary cmd_simulate(const ExperimentConfig& cfg) {
    validate_config(cfg, false);
    const BnbHyper h = cfg.simulation_hyper();
    try {
        h.validate();
    } catch (const DomainError& e) {
        throw UsageError(std::string("invalid configuration: ") + e.what());
    }
    const fs::path dir = cfg.output_dir;
    detail::write_run_metadata(dir, cfg, "simulate");
    const RngStream master(cfg.seed);

    CsvWriter summary({"replicate", "customer_index", "new_dishes", "dishes_taken", "total_count"});
    CsvWriter counts({"replicate", "customer_index", "atom_index", "count"});
    const std::size_t reps = cfg.n_customers == 0 ? 0 : cfg.sim_replicates;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        RngStream rng = master.derive("simulate", rep);
        const MsibpSimulation sim = simulate_msibp(cfg.n_customers, h, rng, cfg.truncation);
        for (std::size_t n = 0; n < sim.customers.size(); ++n) {
            Count total = 0;
            for (const auto& ac : sim.customers[n]) {
                total += ac.count;
                counts.row(rep, n + 1, ac.atom, ac.count);
            }
            summary.row(rep, n + 1, sim.new_dishes[n], sim.customers[n].size(), total);
        }
    }
    write_file_atomic(dir / "msibp_summary.csv", summary.str());
    write_file_atomic(dir / "msibp_counts.csv", counts.str());
    return {summary.rows(), dir};
}

/// Rebuilds the factor tables from a saved snapshot (default: the final
/// snapshot of output_dir).
inline FactorReport cmd_report(const ExperimentConfig& cfg, const fs::path& snapshot_path = {}) {
    const fs::path snap_path = snapshot_path.empty() ? cfg.output_dir / "snapshots" / "final.json" : snapshot_path;
    const Snapshot snap = load_snapshot(snap_path);
    // Snapshot term ids follow the pruned vocabulary, so re-ingest when possible.
    std::vector<std::string> vocab;
    if (!cfg.docword.empty() && fs::exists(cfg.docword)) {
        vocab = detail::load_corpus(cfg).vocab;
    } else if (!cfg.vocab.empty()) {
        std::ifstream v(cfg.vocab);
        if (!v) throw ValidationError("cannot open vocabulary file " + cfg.vocab.string());
        vocab = read_vocab(v);
    }
    const FactorReport report = factor_report(snap.state, snap.factor_totals, cfg.top_m);
    fs::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / "report_factors.csv", detail::factor_report_csv(report, vocab));
    write_file_atomic(cfg.output_dir / "report_factor_params.csv", detail::factor_params_csv(report));
    return report;
}

inline int exit_code_for(const Error& e) {
    if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e)) return kExitData;
    return kExitNumeric;
}

inline std::string error_json(const std::string& kind, const std::string& message, int code,
                              const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j;
    j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j["error"][it.key()] = it.value();
    return j.dump();
}

/**
 * Entry point of the bnbpfa executable. Returns the process exit code;
 * failures print one JSON object on `err`.
 */
inline int run_app(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Poisson factor analysis under the beta-negative binomial process"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string variant_name;
    std::string snapshot_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file (key = value)");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--threads", threads, "worker threads (1 = reference mode)")->check(CLI::PositiveNumber);
        sub->add_option("--variant", variant_name, "BGG, SGG, BG, DIR, GAMMA_GIBBS or GAMMA_EM");
    };
    CLI::App* fit = app.add_subcommand("fit", "fit a model on a corpus");
    CLI::App* eval = app.add_subcommand("eval", "held-out perplexity over random splits");
    CLI::App* simulate = app.add_subcommand("simulate", "simulate the multi-scoop Indian buffet process");
    CLI::App* report = app.add_subcommand("report", "factor tables from a saved snapshot");
    for (CLI::App* sub : {fit, eval, simulate, report}) add_common(sub);
    fit->get_option("--config")->required();
    eval->get_option("--config")->required();
    report->add_option("--snapshot", snapshot_path, "snapshot JSON (default: <output_dir>/snapshots/final.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what(), kExitUsage) << "\n";
        return kExitUsage;
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (threads) cfg.chain.threads = *threads;
        if (!variant_name.empty()) {
            cfg.variant = parse_variant(variant_name);
            cfg.eval_variants.clear();
        }
        if (fit->parsed()) {
            const FitSummary s = cmd_fit(cfg);
            out << "fit: " << s.iterations << " iterations, " << s.samples << " samples, " << s.active_factors
                << " active factors -> " << s.run_dir.string() << "\n";
        } else if (eval->parsed()) {
            const EvalSummary s = cmd_eval(cfg);
            out << "eval: " << s.rows.size() << " fits -> " << (s.run_dir / "perplexity.csv").string() << "\n";
        } else if (simulate->parsed()) {
            const SimulateSummary s = cmd_simulate(cfg);
            out << "simulate: " << s.rows << " rows -> " << (s.run_dir / "msibp_summary.csv").string() << "\n";
        } else if (report->parsed()) {
            const FactorReport r = cmd_report(cfg, snapshot_path);
            out << "report: " << r.active_count() << " active of " << r.rows.size() << " factors\n";
        }
        return kExitOk;
    } catch (const DegeneracyError& e) {
        err << error_json(e.kind(), e.what(), kExitNumeric, {{"term", e.term()}, {"doc", e.doc()}}) << "\n";
        return kExitNumeric;
    } catch (const ParseError& e) {
        err << error_json(e.kind(), e.what(), kExitData, {{"line", e.line()}}) << "\n";
        return kExitData;
    } catch (const Error& e) {
        const int code = exit_code_for(e);
        err << error_json(e.kind(), e.what(), code) << "\n";
        return code;
    } catch (const fs::filesystem_error& e) {
        err << error_json("io", e.what(), kExitData) << "\n";
        return kExitData;
    }
}

} // namespace bnbpfa
