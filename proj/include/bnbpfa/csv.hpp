#pragma once

#include "bnbpfa/error.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

namespace bnbpfa {

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Builds a CSV document in memory; write it with write_file_atomic.
class CsvWriter {
  public:
    explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
        append_row(header);
        rows_ = 0;
    }

    template <typename... Ts> CsvWriter& row(const Ts&... fields) {
        if (sizeof...(Ts) != columns_) throw ValidationError("CsvWriter: wrong number of fields");
        std::vector<std::string> cells;
        cells.reserve(sizeof...(Ts));
        (cells.push_back(cell(fields)), ...);
        append_row(cells);
        return *this;
    }

    const std::string& str() const noexcept { return text_; }
    /// Data rows written so far (header excluded).
    std::size_t rows() const noexcept { return rows_; }

  private:
    template <typename T> static std::string cell(const T& v) {
        if constexpr (std::is_same_v<T, bool>) {
            return v ? "1" : "0";
        } else if constexpr (std::is_floating_point_v<T>) {
            return format_number(static_cast<double>(v));
        } else if constexpr (std::is_integral_v<T>) {
            return std::to_string(v);
        } else {
            return csv_escape(std::string_view(v));
        }
    }

    void append_row(const std::vector<std::string>& cells) {
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (j) text_ += ',';
            text_ += cells[j];
        }
        text_ += '\n';
        ++rows_;
    }

    std::size_t columns_;
    std::size_t rows_ = 0;
    std::string text_;
};

/// Writes to `path.tmp` and renames over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ValidationError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ValidationError("cannot rename " + tmp.string() + ": " + ec.message());
}

} // namespace bnbpfa
