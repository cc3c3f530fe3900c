#pragma once

#include "bnbpfa/error.hpp"
#include "bnbpfa/special_math.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bnbpfa {

struct CountEntry {
    std::uint32_t term;
    std::uint32_t doc;
    Count count;

    friend bool operator==(const CountEntry&, const CountEntry&) = default;
};

/**
 * Sparse P x N matrix of nonnegative word counts.
 *
 * Entries are stored column-major (sorted by document, then term). Only
 * positive counts are kept and every (term, doc) key appears once.
 */
class CountMatrix {
  public:
    CountMatrix() = default;

    /// Builds from triplets. Duplicate keys are summed, zero counts dropped.
    CountMatrix(std::size_t terms, std::size_t docs, std::vector<CountEntry> triplets)
        : terms_(terms), docs_(docs) {
        for (const auto& e : triplets) {
            if (e.term >= terms || e.doc >= docs)
                throw ValidationError("CountMatrix: entry (" + std::to_string(e.term) + ", " +
                                      std::to_string(e.doc) + ") outside " +
                                      std::to_string(terms) + " x " + std::to_string(docs));
            if (e.count < 0) throw ValidationError("CountMatrix: negative count");
        }
        std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
            return a.doc != b.doc ? a.doc < b.doc : a.term < b.term;
        });
        for (const auto& e : triplets) {
            if (!entries_.empty() && entries_.back().doc == e.doc && entries_.back().term == e.term)
                entries_.back().count += e.count;
            else
                entries_.push_back(e);
        }
        std::erase_if(entries_, [](const CountEntry& e) { return e.count == 0; });
        rebuild_index();
    }

    std::size_t terms() const noexcept { return terms_; }
    std::size_t docs() const noexcept { return docs_; }
    std::size_t nnz() const noexcept { return entries_.size(); }
    std::span<const CountEntry> entries() const noexcept { return entries_; }

    /// Entries of document i, sorted by term.
    std::span<const CountEntry> column(std::size_t i) const noexcept {
        return std::span<const CountEntry>(entries_).subspan(
            col_begin_[i], col_begin_[i + 1] - col_begin_[i]);
    }
    /// Index of the first entry of document i in entries().
    std::size_t column_offset(std::size_t i) const noexcept { return col_begin_[i]; }

    Count doc_total(std::size_t i) const noexcept { return doc_totals_[i]; }
    Count total() const noexcept { return total_; }

    Count at(std::size_t term, std::size_t doc) const {
        const auto col = column(doc);
        const auto it = std::lower_bound(col.begin(), col.end(), term,
                                         [](const CountEntry& e, std::size_t t) { return e.term < t; });
        return it != col.end() && it->term == term ? it->count : 0;
    }

    /// Number of documents in which each term occurs.
    std::vector<std::size_t> document_frequency() const {
        std::vector<std::size_t> df(terms_, 0);
        for (const auto& e : entries_) ++df[e.term];
        return df;
    }

    friend bool operator==(const CountMatrix& a, const CountMatrix& b) {
        return a.terms_ == b.terms_ && a.docs_ == b.docs_ && a.entries_ == b.entries_;
    }

  private:
    void rebuild_index() {
        col_begin_.assign(docs_ + 1, 0);
        doc_totals_.assign(docs_, 0);
        total_ = 0;
        for (const auto& e : entries_) {
            ++col_begin_[e.doc + 1];
            doc_totals_[e.doc] += e.count;
            total_ += e.count;
        }
        for (std::size_t i = 0; i < docs_; ++i) col_begin_[i + 1] += col_begin_[i];
    }

    std::size_t terms_ = 0;
    std::size_t docs_ = 0;
    std::vector<CountEntry> entries_;
    std::vector<std::size_t> col_begin_{0};
    std::vector<Count> doc_totals_;
    Count total_ = 0;
};

} // namespace bnbpfa
