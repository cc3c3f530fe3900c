#pragma once

// Sparse bag-of-words text format.
//
//   N            (documents)
//   P            (terms)
//   NNZ          (triplet lines that follow)
//   doc term count
//   ...
//
// Ids are 1-based. The vocabulary file holds one term per line, in term-id
// order. The header can be switched off, in which case N and P are taken
// from the largest ids (and P from the vocabulary when one is given).

#include "bnbpfa/count_matrix.hpp"
#include "bnbpfa/error.hpp"

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bnbpfa {

struct Corpus {
    CountMatrix counts;
    std::vector<std::string> vocab; ///< empty when no vocabulary was supplied

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Splits on runs of blanks and parses every field as a nonnegative integer.
inline std::vector<std::uint64_t> parse_fields(std::string_view line, std::size_t line_no) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        if (pos >= line.size()) break;
        std::size_t end = pos;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, v);
        if (ec != std::errc() || ptr != line.data() + end)
            throw ParseError("expected a nonnegative integer, got '" + std::string(line.substr(pos, end - pos)) + "'",
                             line_no);
        out.push_back(v);
        pos = end;
    }
    return out;
}

} // namespace detail

/**
 * Reads the docword stream. `vocab_size`, when given, fixes P in headerless
 * mode and must match the header otherwise.
 */
inline CountMatrix read_docword(std::istream& in, bool header = true,
                                std::optional<std::size_t> vocab_size = std::nullopt) {
    std::string raw;
    std::size_t line_no = 0;
    std::uint64_t header_values[3] = {0, 0, 0};
    int header_seen = 0;
    std::vector<CountEntry> triplets;
    std::uint64_t max_doc = 0, max_term = 0;
    std::size_t data_lines = 0;
    std::vector<std::size_t> triplet_lines;

    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        const auto f = detail::parse_fields(line, line_no);
        if (header && header_seen < 3) {
            if (f.size() != 1) throw ParseError("header line must hold a single integer", line_no);
            header_values[header_seen++] = f[0];
            continue;
        }
        if (f.size() != 3) throw ParseError("expected 'doc term count'", line_no);
        if (f[0] == 0 || f[1] == 0) throw ParseError("ids are 1-based", line_no);
        if (header && (f[0] > header_values[0] || f[1] > header_values[1]))
            throw ValidationError("line " + std::to_string(line_no) + ": id outside declared range (N=" +
                                  std::to_string(header_values[0]) + ", P=" + std::to_string(header_values[1]) +
                                  ")");
        if (!header && vocab_size && f[1] > *vocab_size)
            throw ValidationError("line " + std::to_string(line_no) + ": term id " + std::to_string(f[1]) +
                                  " exceeds vocabulary size " + std::to_string(*vocab_size));
        max_doc = std::max(max_doc, f[0]);
        max_term = std::max(max_term, f[1]);
        triplets.push_back({static_cast<std::uint32_t>(f[1] - 1), static_cast<std::uint32_t>(f[0] - 1),
                            static_cast<Count>(f[2])});
        ++data_lines;
    }
    if (header && header_seen < 3) throw ParseError("truncated header (need N, P, NNZ)", line_no + 1);

    std::size_t docs = 0, terms = 0;
    if (header) {
        docs = header_values[0];
        terms = header_values[1];
        if (data_lines != header_values[2])
            throw ValidationError("header declares " + std::to_string(header_values[2]) + " entries, found " +
                                  std::to_string(data_lines));
        if (vocab_size && *vocab_size != terms)
            throw ValidationError("vocabulary has " + std::to_string(*vocab_size) + " terms, header declares " +
                                  std::to_string(terms));
    } else {
        docs = max_doc;
        terms = vocab_size ? *vocab_size : max_term;
    }
    return CountMatrix(terms, docs, std::move(triplets));
}

inline std::vector<std::string> read_vocab(std::istream& in) {
    std::vector<std::string> vocab;
    std::string raw;
    while (std::getline(in, raw)) {
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        vocab.push_back(raw);
    }
    while (!vocab.empty() && detail::trim(vocab.back()).empty()) vocab.pop_back();
    return vocab;
}

/// Drops terms that occur in fewer than `min_doc_freq` documents and renumbers
/// the survivors contiguously, keeping their order.
inline Corpus prune_terms(const Corpus& c, std::size_t min_doc_freq) {
    const auto df = c.counts.document_frequency();
    std::vector<std::int64_t> remap(c.counts.terms(), -1);
    Corpus out;
    std::size_t kept = 0;
    for (std::size_t p = 0; p < remap.size(); ++p) {
        if (df[p] >= min_doc_freq) {
            remap[p] = static_cast<std::int64_t>(kept++);
            if (!c.vocab.empty()) out.vocab.push_back(c.vocab[p]);
        }
    }
    std::vector<CountEntry> entries;
    for (const auto& e : c.counts.entries())
        if (remap[e.term] >= 0) entries.push_back({static_cast<std::uint32_t>(remap[e.term]), e.doc, e.count});
    out.counts = CountMatrix(kept, c.counts.docs(), std::move(entries));
    return out;
}

/**
 * Reads a docword file and optional vocabulary file (empty path = none) and
 * prunes rare terms.
 */
inline Corpus ingest_bow(const std::filesystem::path& docword_path, const std::filesystem::path& vocab_path,
                         std::size_t min_doc_freq = 5, bool header = true) {
    Corpus c;
    if (!vocab_path.empty()) {
        std::ifstream v(vocab_path);
        if (!v) throw ValidationError("cannot open vocabulary file " + vocab_path.string());
        c.vocab = read_vocab(v);
    }
    std::ifstream d(docword_path);
    if (!d) throw ValidationError("cannot open docword file " + docword_path.string());
    c.counts = read_docword(d, header, c.vocab.empty() ? std::nullopt : std::optional<std::size_t>(c.vocab.size()));
    return prune_terms(c, min_doc_freq);
}

inline void write_docword(std::ostream& out, const CountMatrix& x, bool header = true) {
    if (header) out << x.docs() << '\n' << x.terms() << '\n' << x.nnz() << '\n';
    for (const auto& e : x.entries()) out << e.doc + 1 << ' ' << e.term + 1 << ' ' << e.count << '\n';
}

inline void export_bow(const Corpus& c, const std::filesystem::path& docword_path,
                       const std::filesystem::path& vocab_path) {
    {
        std::ofstream d(docword_path);
        if (!d) throw ValidationError("cannot write " + docword_path.string());
        write_docword(d, c.counts);
    }
    if (!vocab_path.empty()) {
        std::ofstream v(vocab_path);
        if (!v) throw ValidationError("cannot write " + vocab_path.string());
        for (const auto& t : c.vocab) v << t << '\n';
    }
}

} // namespace bnbpfa
