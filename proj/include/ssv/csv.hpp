#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ssv/errors.hpp"

namespace ssv {

/// Tiny CSV support for the toolkit's own plain, unquoted tables: a header
/// line plus comma-separated rows. Trailing carriage returns are stripped so
/// CRLF files read the same as LF files.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

/// Shortest round-trippable decimal form used by every writer in the toolkit.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace detail

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw data_error("read_csv: cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(f, line)) throw data_error("read_csv: empty file " + path.string());
    detail::strip_cr(line);
    table.header = detail::split_csv_line(line);
    while (std::getline(f, line)) {
        detail::strip_cr(line);
        if (line.empty()) continue;
        table.rows.push_back(detail::split_csv_line(line));
    }
    return table;
}

/// Strict double parse: the whole field must be consumed.
inline bool try_parse_double(const std::string& field, double& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace ssv
