#include "opsqa/csv.hpp"

#include <fstream>

namespace opsqa {

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ParseError(path, 1, "missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");

    CsvTable table;
    table.path = path;

    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any_char = false;
    std::size_t line_no = 1;

    auto end_field = [&]() {
        record.push_back(field);
        field.clear();
    };
    auto end_record = [&]() {
        end_field();
        if (table.header.empty()) {
            table.header = record;
        } else {
            table.rows.push_back(record);
        }
        record.clear();
        any_char = false;
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
                if (c == '\n') ++line_no;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                any_char = true;
                break;
            case ',':
                end_field();
                any_char = true;
                break;
            case '\r':
                break;
            case '\n':
                if (any_char || !field.empty() || !record.empty()) end_record();
                ++line_no;
                break;
            default:
                field.push_back(c);
                any_char = true;
                break;
        }
    }
    if (in_quotes) throw ParseError(path, line_no, "unterminated quoted field");
    if (any_char || !field.empty() || !record.empty()) end_record();

    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != table.header.size()) {
            throw ParseError(path, i + 2, "expected " + std::to_string(table.header.size()) +
                                              " fields, got " + std::to_string(table.rows[i].size()));
        }
    }
    return table;
}

std::string path_basename(const std::string& path) {
    auto pos = path.find_last_of("/\\");
    return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace opsqa
