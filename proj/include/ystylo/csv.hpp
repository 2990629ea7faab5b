#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ystylo {

// RFC-4180: comma delimiter, double-quote quoting, quotes escaped by
// doubling, fields may contain newlines when quoted.
namespace csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // -1 when absent
    int column(const std::string& name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

std::string escape_field(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);
void write(std::ostream& out, const Table& table);

}  // namespace csv
}  // namespace ystylo
