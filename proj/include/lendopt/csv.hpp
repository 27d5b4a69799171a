#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lendopt/errors.hpp"

namespace lendopt::csv {

/// Shortest decimal string that round-trips the double exactly.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Fixed significant-digit formatting (surface files use 12).
inline std::string format_double(double x, int significant) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, significant);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, long row) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError("cannot parse numeric field '" + std::string(s) + "'", row);
    return v;
}

inline long long parse_int(std::string_view s, long row) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError("cannot parse integer field '" + std::string(s) + "'", row);
    return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

/// Writer that prefixes every file with a `# key=value` configuration echo,
/// enough to re-run the producing command bit-identically.
class Writer {
public:
    explicit Writer(const std::string& path) : out_(path) {
        if (!out_) throw InputError("cannot open '" + path + "' for writing");
    }

    void meta(const std::string& key, const std::string& value) {
        out_ << "# " << key << "=" << value << "\n";
    }
    void meta(const std::string& key, double value) { meta(key, format_double(value)); }
    void meta(const std::string& key, long long value) { meta(key, std::to_string(value)); }
    void meta(const std::string& key, std::uint64_t value) { meta(key, std::to_string(value)); }
    void meta(const std::string& key, int value) { meta(key, std::to_string(value)); }

    void header(const std::string& columns) { out_ << columns << "\n"; }
    void row(const std::string& line) { out_ << line << "\n"; }

private:
    std::ofstream out_;
};

struct Table {
    std::map<std::string, std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    // 1-based line number of each data row in the source file (for diagnostics).
    std::vector<long> line_numbers;
};

/// Read a CSV file, collecting `# key=value` lines into meta and validating
/// that every row has as many fields as the header.
inline Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    Table t;
    std::string line;
    long line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string_view body(line);
            body.remove_prefix(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const std::size_t eq = body.find('=');
            if (eq != std::string_view::npos)
                t.meta.emplace(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
            continue;
        }
        auto fields = split(line);
        if (!have_header) {
            for (auto f : fields) t.columns.emplace_back(f);
            have_header = true;
            continue;
        }
        if (fields.size() != t.columns.size())
            throw InputError("expected " + std::to_string(t.columns.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        std::vector<std::string> row;
        row.reserve(fields.size());
        for (auto f : fields) row.emplace_back(f);
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(line_no);
    }
    if (!have_header) throw InputError("file '" + path + "' has no header row");
    return t;
}

}  // namespace lendopt::csv
