#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace landtsir::io {

using Date = std::chrono::sys_days;

/// Strict YYYY-MM-DD. Throws FormatError.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Whole days from `from` to `to`.
inline std::int64_t days_between(Date from, Date to) { return (to - from).count(); }

/// Parses a full-string decimal number. Throws FormatError naming `what`.
double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);

/// Shortest representation that parses back to the identical double.
std::string format_exact(double value);
/// Fixed-point with six decimals; the format of every output table.
std::string format_fixed6(double value);

/// Minimal comma-separated table with a mandatory header row. No quoting:
/// every field in this pipeline is a bare identifier, date or number.
struct CsvTable {
    std::filesystem::path source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based line number in the source for each row, for error messages.
    std::vector<std::size_t> lines;

    std::size_t column(std::string_view name) const;
    std::string where(std::size_t row) const;
};

/// Reads a CSV and checks that its header equals `expected_header` exactly.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

std::string read_text(const std::filesystem::path& path);
/// Writes via a sibling temporary file and rename, so readers never see a
/// partially written file.
void write_text(const std::filesystem::path& path, std::string_view content);

} // namespace landtsir::io
