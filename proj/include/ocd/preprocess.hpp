#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ocd/csv.hpp"

namespace ocd {

struct PreprocessSpec {
    std::int64_t train_rows = 0;        // leading rows used to learn mean/sd
    bool sqrt_transform = false;        // elementwise sqrt before standardizing
    std::optional<double> clip;         // symmetric clip applied after standardizing
};

struct StandardizedSeries {
    std::vector<std::string> columns;   // retained series names
    std::vector<int> source_index;      // original column index per retained series
    std::vector<double> mean;           // training mean per retained series
    std::vector<double> sd;             // training sd per retained series
    std::vector<std::vector<double>> rows;  // all rows standardized, training included
    std::vector<std::string> warnings;  // one entry per dropped constant series
};

// Learn mean/sd on the training window, standardize the whole table
// (training rows included so monitoring may start anywhere), drop series
// that are constant over the training window.
StandardizedSeries preprocess(const CsvTable& table, const PreprocessSpec& spec);

}  // namespace ocd
