#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ocd/detector.hpp"
#include "ocd/inference.hpp"

namespace ocd {

struct MonitorConfig {
    DetectorConfig det;
    InferenceConfig inf;
    std::int64_t cooldown = 0;  // rows skipped after a declaration before restarting
};

// Row numbers are 1-based over the data rows.  Interval endpoints are time
// boundaries: the change is located after row ci_left_row and by row
// ci_right_row; ci_left_row may be 0 (at or before the session start).
struct MonitorRecord {
    std::int64_t session_start_row = 0;
    std::int64_t declared_row = 0;
    std::int64_t ci_left_row = 0;
    std::int64_t ci_right_row = 0;
    std::int64_t ell_used = 0;
    Declaration declaration;    // session-local indices
    InferenceResult inference;  // session-local indices
};

// Repeated detection with reset: run the pipeline, consume the extra
// observations for inference, skip the cool-down window, then restart with
// a fresh detector, until the rows are exhausted.
std::vector<MonitorRecord> monitor(std::span<const std::vector<double>> rows,
                                   const MonitorConfig& cfg);

// Line-delimited record serialization (one JSON object per record).
std::string monitor_record_json(const MonitorRecord& record,
                                std::span<const std::string> columns, const MonitorConfig& cfg);

}  // namespace ocd
