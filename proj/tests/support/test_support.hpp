#pragma once

// Shared helpers for the unit and acceptance tests: summary statistics,
// Kolmogorov–Smirnov tests, a reference KL-NMF update and synthetic corpora.

#include "bnbpfa/bnbpfa.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace bnbpfa::testing {

inline double mean(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double variance(const std::vector<double>& xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
inline double batch_means_se(const std::vector<double>& xs, std::size_t batches = 50) {
    const std::size_t len = xs.size() / batches;
    std::vector<double> bm;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < len; ++j) s += xs[b * len + j];
        bm.push_back(s / static_cast<double>(len));
    }
    return std::sqrt(variance(bm) / static_cast<double>(batches));
}

/// Asymptotic Kolmogorov distribution tail P(K > x).
inline double kolmogorov_tail(double x) {
    if (x < 1e-3) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * x * x);
        s += term;
        if (std::abs(term) < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS test against a continuous CDF; returns the p-value.
inline double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double f = cdf(xs[j]);
        d = std::max({d, static_cast<double>(j + 1) / n - f, f - static_cast<double>(j) / n});
    }
    const double sn = std::sqrt(n);
    return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

/// Classical KL-NMF multiplicative update (W first, then H with the new W)
/// on a dense matrix V ≈ W H.
inline void kl_nmf_update(const Eigen::MatrixXd& V, Eigen::MatrixXd& W, Eigen::MatrixXd& H) {
    Eigen::MatrixXd R = V.array() / (W * H).array();
    for (Eigen::Index i = 0; i < V.rows(); ++i)
        for (Eigen::Index j = 0; j < V.cols(); ++j)
            if (V(i, j) == 0.0) R(i, j) = 0.0;
    const Eigen::RowVectorXd hsum = H.rowwise().sum().transpose();
    Eigen::MatrixXd Wn = W.array() * (R * H.transpose()).array();
    for (Eigen::Index k = 0; k < W.cols(); ++k) Wn.col(k) /= hsum(k);
    W = Wn;
    R = V.array() / (W * H).array();
    for (Eigen::Index i = 0; i < V.rows(); ++i)
        for (Eigen::Index j = 0; j < V.cols(); ++j)
            if (V(i, j) == 0.0) R(i, j) = 0.0;
    const Eigen::VectorXd wsum = W.colwise().sum().transpose();
    Eigen::MatrixXd Hn = H.array() * (W.transpose() * R).array();
    for (Eigen::Index k = 0; k < H.rows(); ++k) Hn.row(k) /= wsum(k);
    H = Hn;
}

inline Eigen::MatrixXd dense(const CountMatrix& x) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.terms()), static_cast<Eigen::Index>(x.docs()));
    for (const auto& e : x.entries()) d(e.term, e.doc) = static_cast<double>(e.count);
    return d;
}

/// Five-factor synthetic corpus: r_k = 1, p_k = 10/11 (mean score 10 per
/// factor, about 50 tokens per document) and loadings from Dir(0.05).
struct Synthetic {
    FactorState truth;
    CountMatrix counts;
};

inline Synthetic five_factor_corpus(std::uint64_t seed, std::size_t terms = 100, std::size_t docs = 200) {
    RngStream rng(seed);
    RngStream truth_rng = rng.derive("truth");
    Synthetic s;
    s.truth = synthetic_bgg_state(terms, docs, std::vector<double>(5, 1.0), std::vector<double>(5, 10.0 / 11.0),
                                  0.05, truth_rng);
    RngStream count_rng = rng.derive("counts");
    s.counts = sample_counts(s.truth, count_rng);
    return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("bnbpfa_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Writes the corpus (docword + vocab "w0", "w1", ...) into dir.
inline void write_corpus(const std::filesystem::path& dir, const CountMatrix& x) {
    Corpus c{x, {}};
    for (std::size_t p = 0; p < x.terms(); ++p) c.vocab.push_back("w" + std::to_string(p));
    export_bow(c, dir / "docword.txt", dir / "vocab.txt");
}

} // namespace bnbpfa::testing
