#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace parcelpop::csv {

using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;

    // Index of a header column, or -1.
    int column(std::string_view name) const;
    // Index of a header column; throws InputError naming `context` if absent.
    std::size_t require_column(std::string_view name, std::string_view context) const;
};

// RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated. A UTF-8
// BOM on the first line is skipped. Blank lines are ignored.
Table read(std::istream& in);
Table read_file(const std::string& path);

void write_row(std::ostream& out, const Row& row);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

double parse_double(std::string_view s, std::string_view context);
long long parse_int(std::string_view s, std::string_view context);

} // namespace parcelpop::csv
