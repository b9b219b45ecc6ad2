#include "hdplus/text_util.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hdplus/errors.hpp"

namespace hdplus::text_util {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s, char marker) {
    const auto p = s.find(marker);
    return p == std::string::npos ? s : s.substr(0, p);
}

std::pair<std::string, std::string> split_key_value(const std::string& line,
                                                    const std::string& where) {
    const auto p = line.find('=');
    if (p == std::string::npos) throw ParseError(where + "expected 'key = value'");
    return {trim(line.substr(0, p)), trim(line.substr(p + 1))};
}

double parse_double(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto* first = t.data();
    const auto* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ParseError(where + "invalid number '" + t + "'");
    }
    return v;
}

long long parse_integer(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ParseError(where + "invalid integer '" + t + "'");
    }
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError("CSV: missing column '" + name + "'");
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::vector<std::string>& required) {
    CsvTable t;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto cells = split_row(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ParseError("CSV line " + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(lineno);
    }
    if (!have_header) throw ParseError("CSV: empty input");
    for (const auto& name : required) t.column(name);
    return t;
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

}  // namespace hdplus::text_util
