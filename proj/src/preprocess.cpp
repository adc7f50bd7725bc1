#include "ocd/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ocd {

StandardizedSeries preprocess(const CsvTable& table, const PreprocessSpec& spec) {
    const std::int64_t n_rows = static_cast<std::int64_t>(table.rows.size());
    const std::size_t n_cols = table.columns.size();
    if (spec.train_rows < 2) {
        throw std::invalid_argument("preprocess: need at least 2 training rows");
    }
    if (spec.train_rows > n_rows) {
        throw std::invalid_argument("preprocess: training window (" +
                                    std::to_string(spec.train_rows) + ") exceeds the data (" +
                                    std::to_string(n_rows) + " rows)");
    }
    if (spec.clip.has_value() && !(*spec.clip > 0.0)) {
        throw std::invalid_argument("preprocess: clip level must be positive");
    }

    // optional variance-stabilizing transform
    std::vector<std::vector<double>> data = table.rows;
    if (spec.sqrt_transform) {
        for (std::size_t r = 0; r < data.size(); ++r) {
            for (std::size_t c = 0; c < n_cols; ++c) {
                const double v = data[r][c];
                if (v < 0.0) {
                    throw std::invalid_argument("preprocess: negative value at row " +
                                                std::to_string(r + 1) + ", column '" +
                                                table.columns[c] + "' under sqrt transform");
                }
                data[r][c] = std::sqrt(v);
            }
        }
    }

    StandardizedSeries out;
    std::vector<double> mean(n_cols, 0.0);
    std::vector<double> sd(n_cols, 0.0);
    for (std::size_t c = 0; c < n_cols; ++c) {
        double sum = 0.0;
        for (std::int64_t r = 0; r < spec.train_rows; ++r) {
            sum += data[static_cast<std::size_t>(r)][c];
        }
        mean[c] = sum / static_cast<double>(spec.train_rows);
        double ss = 0.0;
        for (std::int64_t r = 0; r < spec.train_rows; ++r) {
            const double d = data[static_cast<std::size_t>(r)][c] - mean[c];
            ss += d * d;
        }
        sd[c] = std::sqrt(ss / static_cast<double>(spec.train_rows - 1));
        if (sd[c] > 0.0) {
            out.columns.push_back(table.columns[c]);
            out.source_index.push_back(static_cast<int>(c));
            out.mean.push_back(mean[c]);
            out.sd.push_back(sd[c]);
        } else {
            out.warnings.push_back("series '" + table.columns[c] +
                                   "' is constant over the training window and was dropped");
        }
    }
    if (out.columns.empty()) {
        throw std::invalid_argument("preprocess: every series is constant over the training window");
    }

    out.rows.resize(data.size());
    for (std::size_t r = 0; r < data.size(); ++r) {
        std::vector<double>& row = out.rows[r];
        row.resize(out.columns.size());
        for (std::size_t k = 0; k < out.columns.size(); ++k) {
            const std::size_t c = static_cast<std::size_t>(out.source_index[k]);
            double v = (data[r][c] - mean[c]) / sd[c];
            if (spec.clip.has_value()) {
                v = std::clamp(v, -*spec.clip, *spec.clip);
            }
            row[k] = v;
        }
    }
    return out;
}

}  // namespace ocd
