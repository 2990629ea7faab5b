#include "ystylo/csv.hpp"

#include <fstream>
#include <sstream>

#include "ystylo/errors.hpp"

namespace ystylo::csv {

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

namespace {

// One record, which may span physical lines when fields are quoted.
// Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        if (ch == '"') {
            in_quotes = true;
            continue;
        }
        if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
            continue;
        }
        if (ch == '\r') {
            if (in.peek() == '\n') in.get();
            fields.push_back(std::move(field));
            return true;
        }
        if (ch == '\n') {
            fields.push_back(std::move(field));
            return true;
        }
        field += ch;
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

Table read(std::istream& in) {
    Table table;
    std::vector<std::string> fields;
    if (!read_record(in, fields)) return table;
    table.header = fields;
    while (read_record(in, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        table.rows.push_back(fields);
    }
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open CSV file: " + path);
    return read(in);
}

std::string escape_field(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape_field(fields[i]);
    }
    out << '\n';
}

void write(std::ostream& out, const Table& table) {
    write_row(out, table.header);
    for (const auto& row : table.rows) write_row(out, row);
}

}  // namespace ystylo::csv
