#include "parcelpop/csv.hpp"
#include "parcelpop/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace parcelpop::csv {

int Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::size_t Table::require_column(std::string_view name, std::string_view context) const {
    const int c = column(name);
    if (c < 0)
        throw InputError(std::string(context) + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(c);
}

namespace {

bool is_blank(const Row& row) {
    return row.empty() || (row.size() == 1 && row[0].empty());
}

// Reads one logical record; returns false at end of input.
bool read_record(std::istream& in, Row& row) {
    row.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            return true;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) return false;
    row.push_back(std::move(field));
    return true;
}

} // namespace

Table read(std::istream& in) {
    Table t;
    Row row;
    bool first = true;
    while (read_record(in, row)) {
        if (is_blank(row)) continue;
        if (first) {
            if (row[0].rfind("\xEF\xBB\xBF", 0) == 0) row[0].erase(0, 3);
            t.header = row;
            first = false;
        } else {
            t.rows.push_back(row);
        }
    }
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read(in);
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        const std::string& f = row[i];
        if (f.find_first_of(",\"\n\r") == std::string::npos) {
            out << f;
            continue;
        }
        out << '"';
        for (char c : f) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << '\n';
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {
std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}
} // namespace

double parse_double(std::string_view s, std::string_view context) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError(std::string(context) + ": not a number: '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s, std::string_view context) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError(std::string(context) + ": not an integer: '" + std::string(s) + "'");
    return v;
}

} // namespace parcelpop::csv
