#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ocd {

// Numeric CSV: first row is a header of series names, one row per time
// step, every cell present and numeric.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace ocd
