#pragma once

// Small text helpers shared by the file-format parsers.

#include <string>
#include <utility>
#include <vector>

namespace hdplus::text_util {

std::string trim(const std::string& s);
std::string strip_comment(const std::string& s, char marker = '#');

/// Splits "key = value". Throws ParseError (prefixed with `where`) if no '='.
std::pair<std::string, std::string> split_key_value(const std::string& line,
                                                    const std::string& where);

/// Full-string double parse; throws ParseError on trailing garbage.
double parse_double(const std::string& s, const std::string& where);
long long parse_integer(const std::string& s, const std::string& where);

/// Throws ConfigError when the file cannot be opened.
std::string read_file(const std::string& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;

    /// Column index by header name; throws ParseError when absent.
    std::size_t column(const std::string& name) const;
};

/// Comma-separated text with a header row; blank lines and '#' comment lines
/// are skipped, cells are trimmed. Every row must match the header width.
CsvTable parse_csv(const std::string& text, const std::vector<std::string>& required = {});

/// Shortest round-trip representation of a double.
std::string format_double(double x);

}  // namespace hdplus::text_util
