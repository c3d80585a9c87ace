#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace epiforge::csv {

/// One physical record of a delimiter-separated file.
struct Row {
    std::vector<std::string> cells;
    int line = 0; ///< 1-based line number where the record starts
};

/// Splits `content` into records, honouring double-quoted cells (RFC 4180).
/// Quoted cells may contain delimiters, doubled quotes and line breaks.
/// A UTF-8 byte-order mark at the start is ignored.
std::vector<Row> parse(std::string_view content, char delimiter = ',');

/// Quotes a cell if it contains the delimiter, a quote or a line break.
std::string escape(std::string_view cell, char delimiter = ',');

/// Joins already-stringified cells into one line (no trailing newline).
std::string join(const std::vector<std::string> &cells, char delimiter = ',');

} // namespace epiforge::csv
