#include "ocd/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ocd/parallel.hpp"
#include "ocd/rng.hpp"

namespace ocd {

TuningPreset theoretical_preset(int p, double gamma, double beta, double alpha, double c1,
                                double c2, std::optional<int> s_hint, double c3) {
    if (p < 2) {
        throw std::invalid_argument("theoretical_preset: p must be at least 2");
    }
    if (!(gamma >= 1.0)) {
        throw std::invalid_argument("theoretical_preset: gamma must be at least 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("theoretical_preset: alpha must lie in (0,1)");
    }
    if (!(beta > 0.0)) {
        throw std::invalid_argument("theoretical_preset: beta must be positive");
    }
    if (!(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0)) {
        throw std::invalid_argument("theoretical_preset: constants must be positive");
    }
    TuningPreset preset;
    preset.provenance = Provenance::Theoretical;
    preset.t_diag = std::log(16.0 * p * gamma * std::log2(4.0 * p));
    preset.t_off = 8.0 * std::log(16.0 * p * gamma * std::log2(2.0 * p));
    const double beta_clamp = std::max(1.0 / (beta * beta), 1.0);
    preset.a = c1 * std::sqrt(std::log(p * gamma * beta_clamp / alpha));
    preset.d1 = c2 * preset.a;
    preset.d2 = 4.0 * preset.d1 * preset.d1;
    preset.ell = 0;
    if (s_hint.has_value()) {
        if (*s_hint < 2) {
            throw std::invalid_argument("theoretical_preset: s_hint must be at least 2");
        }
        const double raw = c3 * (preset.a * preset.a * (*s_hint) * std::log2(2.0 * p) /
                                     (beta * beta) +
                                 1.0);
        preset.ell = static_cast<std::int64_t>(std::ceil(raw));
    }
    return preset;
}

PracticalScales practical_preset(int p, double alpha, double c) {
    if (p < 2) {
        throw std::invalid_argument("practical_preset: p must be at least 2");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("practical_preset: alpha must lie in (0,1)");
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("practical_preset: c must be positive");
    }
    PracticalScales out;
    out.a = std::sqrt(2.0 * std::log(static_cast<double>(p)));
    out.d1 = c * std::sqrt(std::log(p / alpha));
    out.d2 = 4.0 * out.d1 * out.d1;
    return out;
}

namespace {

double empirical_upper_quantile(std::vector<double> values, double q) {
    // (1-q)-quantile as the ceil((1-q)*n)-th order statistic
    const std::size_t n = values.size();
    const std::size_t rank = static_cast<std::size_t>(std::ceil((1.0 - q) * static_cast<double>(n)));
    if (rank < 1 || rank > n) {
        throw std::invalid_argument("monte_carlo_thresholds: quantile level not attainable with this many repetitions");
    }
    std::sort(values.begin(), values.end());
    return values[rank - 1];
}

}  // namespace

MonteCarloThresholds monte_carlo_thresholds(const ScaleGrid& grid, std::int64_t gamma, double a,
                                            Variant variant, int reps, std::uint64_t seed,
                                            double q_diag, double q_off, int threads) {
    if (reps < 50) {
        throw std::invalid_argument("monte_carlo_thresholds: need at least 50 repetitions");
    }
    if (gamma < 1) {
        throw std::invalid_argument("monte_carlo_thresholds: gamma must be at least 1");
    }
    if (!(q_diag > 0.0 && q_diag < 1.0) || !(q_off > 0.0 && q_off < 1.0)) {
        throw std::invalid_argument("monte_carlo_thresholds: quantile levels must lie in (0,1)");
    }
    const double resolution = std::min(std::min(q_diag, 1.0 - q_diag), std::min(q_off, 1.0 - q_off));
    if (static_cast<double>(reps) * resolution < 1.0) {
        throw std::invalid_argument(
            "monte_carlo_thresholds: too few repetitions to resolve the requested quantile");
    }
    const int p = grid.p();
    std::vector<double> max_diag(static_cast<std::size_t>(reps), 0.0);
    std::vector<double> max_off(static_cast<std::size_t>(reps), 0.0);

    DetectorConfig cfg{grid, a, std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity(), variant};
    parallel_for(reps, threads, [&](std::int64_t rep) {
        Rng rng = Rng::for_rep(seed, static_cast<std::uint64_t>(rep));
        Detector det(cfg);
        std::vector<double> x(static_cast<std::size_t>(p));
        double md = 0.0;
        double mo = 0.0;
        for (std::int64_t i = 0; i < gamma; ++i) {
            for (int j = 0; j < p; ++j) {
                x[static_cast<std::size_t>(j)] = rng.gaussian();
            }
            const StepOutcome out = det.step(x);
            md = std::max(md, out.s_diag);
            mo = std::max(mo, out.s_off);
        }
        max_diag[static_cast<std::size_t>(rep)] = md;
        max_off[static_cast<std::size_t>(rep)] = mo;
    });

    MonteCarloThresholds result;
    result.t_diag = empirical_upper_quantile(max_diag, q_diag);
    result.t_off = empirical_upper_quantile(max_off, q_off);
    int alarms = 0;
    for (int r = 0; r < reps; ++r) {
        if (max_diag[static_cast<std::size_t>(r)] >= result.t_diag ||
            max_off[static_cast<std::size_t>(r)] >= result.t_off) {
            ++alarms;
        }
    }
    result.alarm_fraction = static_cast<double>(alarms) / static_cast<double>(reps);
    return result;
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Theoretical:
            return "theoretical";
        case Provenance::Practical:
            return "practical";
        case Provenance::MonteCarlo:
            return "monte_carlo";
    }
    return "practical";
}

Provenance provenance_from_name(const std::string& name) {
    if (name == "theoretical") {
        return Provenance::Theoretical;
    }
    if (name == "practical") {
        return Provenance::Practical;
    }
    if (name == "monte_carlo") {
        return Provenance::MonteCarlo;
    }
    throw std::invalid_argument("unknown provenance: " + name);
}

void write_preset_file(const std::string& path, const TuningPreset& preset) {
    nlohmann::json j;
    j["a"] = preset.a;
    j["t_diag"] = preset.t_diag;
    j["t_off"] = preset.t_off;
    j["d1"] = preset.d1;
    j["d2"] = preset.d2;
    j["ell"] = preset.ell;
    j["provenance"] = provenance_name(preset.provenance);
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write preset file: " + path);
    }
    out << j.dump(2) << "\n";
}

TuningPreset read_preset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read preset file: " + path);
    }
    nlohmann::json j;
    in >> j;
    TuningPreset preset;
    preset.a = j.at("a").get<double>();
    preset.t_diag = j.at("t_diag").get<double>();
    preset.t_off = j.at("t_off").get<double>();
    preset.d1 = j.at("d1").get<double>();
    preset.d2 = j.at("d2").get<double>();
    preset.ell = j.value("ell", static_cast<std::int64_t>(0));
    preset.provenance = provenance_from_name(j.value("provenance", std::string("practical")));
    return preset;
}

}  // namespace ocd
