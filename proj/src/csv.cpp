#include "epiforge/csv.hpp"

namespace epiforge::csv {

std::vector<Row> parse(std::string_view content, char delimiter) {
    if (content.substr(0, 3) == "\xEF\xBB\xBF") {
        content.remove_prefix(3);
    }

    std::vector<Row> rows;
    Row current;
    std::string cell;
    bool in_quotes = false;
    bool row_has_data = false;
    int line = 1;
    current.line = line;

    auto end_cell = [&] {
        current.cells.push_back(std::move(cell));
        cell.clear();
    };
    auto end_row = [&] {
        end_cell();
        rows.push_back(std::move(current));
        current = Row{};
        row_has_data = false;
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                cell.push_back(c);
            }
            continue;
        }

        if (c == '"') {
            in_quotes = true;
            row_has_data = true;
        } else if (c == delimiter) {
            end_cell();
            row_has_data = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
                ++i;
            }
            end_row();
            ++line;
            current.line = line;
        } else {
            cell.push_back(c);
            row_has_data = true;
        }
    }
    if (row_has_data || !cell.empty() || !current.cells.empty()) {
        end_row();
    }
    return rows;
}

std::string escape(std::string_view cell, char delimiter) {
    if (cell.find_first_of(std::string{delimiter} + "\"\r\n") == std::string_view::npos) {
        return std::string(cell);
    }
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string> &cells, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out.push_back(delimiter);
        }
        out += escape(cells[i], delimiter);
    }
    return out;
}

} // namespace epiforge::csv
