#include "ocd/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace ocd {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                         : comma - start);
        // trim surrounding whitespace and a possible trailing CR
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? std::string()
                                                   : cell.substr(first, last - first + 1));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col_no) {
    if (cell.empty()) {
        throw std::runtime_error("csv: missing cell at line " + std::to_string(line_no) +
                                 ", column " + std::to_string(col_no));
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw std::runtime_error("csv: non-numeric cell '" + cell + "' at line " +
                                 std::to_string(line_no) + ", column " + std::to_string(col_no));
    }
    return value;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && in.eof()) {
            break;
        }
        const std::vector<std::string> cells = split_line(line);
        if (line_no == 1) {
            table.columns = cells;
            if (table.columns.empty() || table.columns.front().empty()) {
                throw std::runtime_error("csv: empty header");
            }
            continue;
        }
        if (cells.size() == 1 && cells.front().empty()) {
            continue;  // blank line
        }
        if (cells.size() != table.columns.size()) {
            throw std::runtime_error("csv: line " + std::to_string(line_no) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(table.columns.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            row[c] = parse_cell(cells[c], line_no, c + 1);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) {
        throw std::runtime_error("csv: no header row");
    }
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return read_csv(in);
}

}  // namespace ocd
