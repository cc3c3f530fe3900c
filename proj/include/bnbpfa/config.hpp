#pragma once

// Flat "key = value" experiment configuration. '#' starts a comment. Every
// key has a default, so a minimal file only names the corpus.

#include "bnbpfa/bnb_process.hpp"
#include "bnbpfa/csv.hpp"
#include "bnbpfa/error.hpp"
#include "bnbpfa/hyper.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bnbpfa {

struct ExperimentConfig {
    Variant variant = Variant::BGG;
    HyperParams hyper;
    ChainConfig chain;

    std::filesystem::path docword;
    std::filesystem::path vocab;
    bool header = true;
    std::size_t min_doc_freq = 5;

    double split_ratio = 0.8;
    std::size_t replicates = 5;
    std::vector<double> a_phi_grid;       ///< eval: sweep a_φ (empty = configured a_φ only)
    std::vector<std::size_t> k_grid;      ///< eval: sweep K / K_max (empty = configured K)
    std::vector<Variant> eval_variants;   ///< eval: variants to compare (empty = `variant`)

    std::filesystem::path output_dir = "runs";
    std::uint64_t seed = 1;
    std::size_t top_m = 10;
    std::size_t snapshot_every = 0; ///< extra snapshot every n collected samples; 0 = final only

    // simulate
    std::size_t n_customers = 10;
    std::size_t sim_replicates = 1000;
    MarkMeasure mark = MarkMeasure::gamma;
    TruncationMode truncation = TruncationMode::poisson;

    /// Variants evaluated by `eval`.
    std::vector<Variant> variants_for_eval() const {
        return eval_variants.empty() ? std::vector<Variant>{variant} : eval_variants;
    }

    BnbHyper simulation_hyper() const {
        BnbHyper h = hyper.bnb();
        h.mark = mark;
        if (mark == MarkMeasure::delta_one) h.gamma_mass = 1.0;
        return h;
    }
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T> T parse_number(const std::string& key, const std::string& v) {
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        if (v == "inf") return HUGE_VAL;
    }
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw UsageError("config key '" + key + "': cannot parse '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config key '" + key + "': expected true or false, got '" + v + "'");
}

template <typename T> std::vector<T> parse_list(const std::string& key, const std::string& v) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim_copy(item);
        if (item.empty()) continue;
        if constexpr (std::is_same_v<T, Variant>)
            out.push_back(parse_variant(item));
        else
            out.push_back(parse_number<T>(key, item));
    }
    return out;
}

template <typename T> std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (j) out += ",";
        if constexpr (std::is_same_v<T, Variant>)
            out += std::string(to_string(xs[j]));
        else if constexpr (std::is_floating_point_v<T>)
            out += format_number(xs[j]);
        else
            out += std::to_string(xs[j]);
    }
    return out;
}

struct ConfigKey {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<std::pair<std::string, ConfigKey>>& config_keys() {
    using C = ExperimentConfig;
    auto num = [](auto member) {
        return ConfigKey{[member](C& c, const std::string& v) {
                             auto& ref = member(c);
                             ref = parse_number<std::decay_t<decltype(ref)>>("", v);
                         },
                         [member](const C& c) {
                             const auto& ref = member(const_cast<C&>(c));
                             if constexpr (std::is_floating_point_v<std::decay_t<decltype(ref)>>)
                                 return format_number(ref);
                             else
                                 return std::to_string(ref);
                         }};
    };
    auto flag = [](auto member) {
        return ConfigKey{[member](C& c, const std::string& v) { member(c) = parse_bool("", v); },
                         [member](const C& c) { return std::string(member(const_cast<C&>(c)) ? "true" : "false"); }};
    };
    auto opt = [](auto member, auto fallback) {
        return ConfigKey{[member](C& c, const std::string& v) { member(c) = parse_number<double>("", v); },
                         [fallback](const C& c) { return format_number(fallback(c)); }};
    };
    auto path = [](auto member) {
        return ConfigKey{[member](C& c, const std::string& v) { member(c) = v; },
                         [member](const C& c) { return member(const_cast<C&>(c)).string(); }};
    };
    static const std::vector<std::pair<std::string, ConfigKey>> keys = {
        {"variant", {[](C& c, const std::string& v) { c.variant = parse_variant(v); },
                     [](const C& c) { return std::string(to_string(c.variant)); }}},
        {"K", num([](C& c) -> auto& { return c.hyper.K; })},
        {"c", num([](C& c) -> auto& { return c.hyper.c; })},
        {"c0", num([](C& c) -> auto& { return c.hyper.c0; })},
        {"r0", num([](C& c) -> auto& { return c.hyper.r0; })},
        {"gamma", num([](C& c) -> auto& { return c.hyper.gamma; })},
        {"alpha", num([](C& c) -> auto& { return c.hyper.alpha; })},
        {"eps", opt([](C& c) -> auto& { return c.hyper.eps; }, [](const C& c) { return c.hyper.eps_value(); })},
        {"a_phi", opt([](C& c) -> auto& { return c.hyper.a_phi; },
                      [](const C& c) { return c.hyper.a_phi_for(c.variant); })},
        {"a_theta", opt([](C& c) -> auto& { return c.hyper.a_theta; },
                        [](const C& c) { return c.hyper.a_theta_for(c.variant); })},
        {"b_phi", num([](C& c) -> auto& { return c.hyper.b_phi; })},
        {"g", num([](C& c) -> auto& { return c.hyper.g; })},
        {"estimate_g", flag([](C& c) -> auto& { return c.hyper.estimate_g; })},
        {"r_fixed", num([](C& c) -> auto& { return c.hyper.r_fixed; })},
        {"n_iterations", num([](C& c) -> auto& { return c.chain.n_iterations; })},
        {"burn_in", num([](C& c) -> auto& { return c.chain.burn_in; })},
        {"thin", num([](C& c) -> auto& { return c.chain.thin; })},
        {"mh_stepsize", num([](C& c) -> auto& { return c.chain.mh_stepsize; })},
        {"mh_adapt_window", num([](C& c) -> auto& { return c.chain.mh_adapt_window; })},
        {"accept_low", num([](C& c) -> auto& { return c.chain.accept_low; })},
        {"accept_high", num([](C& c) -> auto& { return c.chain.accept_high; })},
        {"adapt", flag([](C& c) -> auto& { return c.chain.adapt; })},
        {"audit", flag([](C& c) -> auto& { return c.chain.audit; })},
        {"threads", num([](C& c) -> auto& { return c.chain.threads; })},
        {"docword", path([](C& c) -> auto& { return c.docword; })},
        {"vocab", path([](C& c) -> auto& { return c.vocab; })},
        {"header", flag([](C& c) -> auto& { return c.header; })},
        {"min_doc_freq", num([](C& c) -> auto& { return c.min_doc_freq; })},
        {"split_ratio", num([](C& c) -> auto& { return c.split_ratio; })},
        {"replicates", num([](C& c) -> auto& { return c.replicates; })},
        {"a_phi_grid", {[](C& c, const std::string& v) { c.a_phi_grid = parse_list<double>("a_phi_grid", v); },
                        [](const C& c) { return join(c.a_phi_grid); }}},
        {"k_grid", {[](C& c, const std::string& v) { c.k_grid = parse_list<std::size_t>("k_grid", v); },
                    [](const C& c) { return join(c.k_grid); }}},
        {"eval_variants",
         {[](C& c, const std::string& v) { c.eval_variants = parse_list<Variant>("eval_variants", v); },
          [](const C& c) { return join(c.eval_variants); }}},
        {"output_dir", path([](C& c) -> auto& { return c.output_dir; })},
        {"seed", num([](C& c) -> auto& { return c.seed; })},
        {"top_m", num([](C& c) -> auto& { return c.top_m; })},
        {"snapshot_every", num([](C& c) -> auto& { return c.snapshot_every; })},
        {"n_customers", num([](C& c) -> auto& { return c.n_customers; })},
        {"sim_replicates", num([](C& c) -> auto& { return c.sim_replicates; })},
        {"mark", {[](C& c, const std::string& v) {
                      if (v == "gamma")
                          c.mark = MarkMeasure::gamma;
                      else if (v == "delta_one")
                          c.mark = MarkMeasure::delta_one;
                      else
                          throw UsageError("config key 'mark': expected gamma or delta_one");
                  },
                  [](const C& c) { return std::string(c.mark == MarkMeasure::gamma ? "gamma" : "delta_one"); }}},
        {"truncation", {[](C& c, const std::string& v) {
                            if (v == "poisson")
                                c.truncation = TruncationMode::poisson;
                            else if (v == "expected")
                                c.truncation = TruncationMode::expected;
                            else
                                throw UsageError("config key 'truncation': expected poisson or expected");
                        },
                        [](const C& c) {
                            return std::string(c.truncation == TruncationMode::poisson ? "poisson" : "expected");
                        }}},
    };
    return keys;
}

} // namespace detail

/// Sets one key. Unknown keys and unparsable values raise UsageError.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [name, k] : detail::config_keys()) {
        if (name == key) {
            try {
                k.set(cfg, value);
            } catch (const UsageError& e) {
                throw UsageError("config key '" + key + "': " + e.what());
            }
            return;
        }
    }
    throw UsageError("unknown config key '" + key + "'");
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim_copy(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = detail::trim_copy(std::string_view(line).substr(0, eq));
        const auto value = detail::trim_copy(std::string_view(line).substr(eq + 1));
        try {
            set_config_value(cfg, key, value);
        } catch (const UsageError& e) {
            throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

/// Relative corpus paths are resolved against `base`.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    ExperimentConfig cfg = parse_config(in);
    const auto base = path.parent_path();
    if (!cfg.docword.empty() && cfg.docword.is_relative()) cfg.docword = base / cfg.docword;
    if (!cfg.vocab.empty() && cfg.vocab.is_relative()) cfg.vocab = base / cfg.vocab;
    return cfg;
}

/// Every key with its resolved value, in a form parse_config reads back.
inline std::string config_text(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [name, k] : detail::config_keys()) out += name + " = " + k.get(cfg) + "\n";
    return out;
}

/// Type and range checks. `needs_corpus` also requires the corpus files.
inline void validate_config(const ExperimentConfig& cfg, bool needs_corpus) {
    try {
        cfg.chain.validate();
        cfg.hyper.validate(cfg.variant);
        for (Variant v : cfg.variants_for_eval()) cfg.hyper.validate(v);
    } catch (const DomainError& e) {
        throw UsageError(std::string("invalid configuration: ") + e.what());
    }
    if (cfg.chain.threads < 1) throw UsageError("threads must be >= 1");
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) throw UsageError("split_ratio must lie in (0, 1)");
    if (cfg.replicates < 1) throw UsageError("replicates must be >= 1");
    for (double a : cfg.a_phi_grid)
        if (!(a > 0.0)) throw UsageError("a_phi_grid values must be positive");
    for (std::size_t k : cfg.k_grid)
        if (k < 1) throw UsageError("k_grid values must be >= 1");
    if (needs_corpus) {
        if (cfg.docword.empty()) throw UsageError("config must set docword");
        if (!std::filesystem::exists(cfg.docword))
            throw UsageError("docword file not found: " + cfg.docword.string());
        if (!cfg.vocab.empty() && !std::filesystem::exists(cfg.vocab))
            throw UsageError("vocab file not found: " + cfg.vocab.string());
    }
}

} // namespace bnbpfa
