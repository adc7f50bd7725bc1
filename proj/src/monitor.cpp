#include "ocd/monitor.hpp"

#include <stdexcept>

#include <json.hpp>

namespace ocd {

std::vector<MonitorRecord> monitor(std::span<const std::vector<double>> rows,
                                   const MonitorConfig& cfg) {
    const int p = cfg.det.grid.p();
    if (cfg.cooldown < 0) {
        throw std::invalid_argument("monitor: cooldown must be non-negative");
    }
    std::vector<MonitorRecord> records;
    std::int64_t cursor = 0;
    const std::int64_t n_rows = static_cast<std::int64_t>(rows.size());
    while (cursor < n_rows) {
        std::int64_t offset = cursor;
        const VectorSource source = [&](std::span<double> out) {
            if (offset >= n_rows) {
                return false;
            }
            const std::vector<double>& row = rows[static_cast<std::size_t>(offset)];
            if (static_cast<int>(row.size()) != p) {
                throw std::invalid_argument("monitor: row has wrong width");
            }
            std::copy(row.begin(), row.end(), out.begin());
            ++offset;
            return true;
        };
        const RunOutcome run = run_ocd_ci(source, cfg.det, cfg.inf);
        if (!run.declared) {
            break;
        }
        MonitorRecord rec;
        rec.session_start_row = cursor + 1;
        rec.declared_row = cursor + run.declaration.n;
        rec.ci_left_row = cursor + run.inference.ci_left;
        rec.ci_right_row = cursor + run.inference.ci_right;
        rec.ell_used = run.ell_used;
        rec.declaration = run.declaration;
        rec.inference = run.inference;
        records.push_back(std::move(rec));
        cursor += run.declaration.n + run.ell_used + cfg.cooldown;
    }
    return records;
}

std::string monitor_record_json(const MonitorRecord& record,
                                std::span<const std::string> columns, const MonitorConfig& cfg) {
    nlohmann::json j;
    j["n"] = record.declared_row;
    j["session_start"] = record.session_start_row;
    j["ci_left"] = record.ci_left_row;
    j["ci_right"] = record.ci_right_row;
    j["uninformative_left"] = record.inference.uninformative_left;
    j["ell_used"] = record.ell_used;

    nlohmann::json anchor;
    anchor["coordinate"] = record.inference.anchor.coord + 1;
    if (record.inference.anchor.coord < static_cast<int>(columns.size())) {
        anchor["column"] = columns[static_cast<std::size_t>(record.inference.anchor.coord)];
    }
    anchor["scale"] = record.inference.anchor.scale;
    j["anchor"] = anchor;

    nlohmann::json support = nlohmann::json::array();
    for (std::size_t i = 0; i < record.inference.support.size(); ++i) {
        nlohmann::json entry;
        const int coord = record.inference.support[i];
        entry["coordinate"] = coord + 1;
        if (coord < static_cast<int>(columns.size())) {
            entry["column"] = columns[static_cast<std::size_t>(coord)];
        }
        entry["b_tilde"] = record.inference.support_scale[i];
        support.push_back(entry);
    }
    j["support"] = support;

    nlohmann::json config;
    config["p"] = cfg.det.grid.p();
    config["beta"] = cfg.det.grid.beta();
    config["variant"] = cfg.det.variant == Variant::Ocd ? "ocd" : "ocd-prime";
    config["a"] = cfg.det.a;
    config["t_diag"] = cfg.det.t_diag;
    config["t_off"] = cfg.det.t_off;
    config["d1"] = cfg.inf.d1;
    config["d2"] = cfg.inf.d2;
    config["ell"] = cfg.inf.ell;
    config["alpha"] = cfg.inf.alpha;
    config["cooldown"] = cfg.cooldown;
    j["config"] = config;
    return j.dump();
}

}  // namespace ocd
