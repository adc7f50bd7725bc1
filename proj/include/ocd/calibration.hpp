#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ocd/detector.hpp"
#include "ocd/scale_grid.hpp"

namespace ocd {

enum class Provenance { Theoretical, Practical, MonteCarlo };

struct TuningPreset {
    double a = 0.0;
    double t_diag = 0.0;
    double t_off = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    std::int64_t ell = 0;
    Provenance provenance = Provenance::Practical;
};

// Threshold and tuning formulas; natural log throughout, log2 only inside
// the dyadic terms.  Default c1 = sqrt(8) (the smallest admissible slope
// for the a formula), c2 = 1.  Providing s_hint >= 2 also fills the extra
// sampling budget ell = ceil(c3 * (a^2 * s * log2(2p) / beta^2 + 1)).
TuningPreset theoretical_preset(int p, double gamma, double beta, double alpha,
                                double c1 = 2.8284271247461903, double c2 = 1.0,
                                std::optional<int> s_hint = std::nullopt, double c3 = 1.0);

struct PracticalScales {
    double a = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// a = sqrt(2 ln p), d1 = c * sqrt(ln(p/alpha)), d2 = 4 d1^2.
PracticalScales practical_preset(int p, double alpha, double c = 0.5);

struct MonteCarloThresholds {
    double t_diag = 0.0;
    double t_off = 0.0;
    // fraction of calibration runs whose maxima reach either returned
    // threshold: the per-horizon alarm budget the calibration encodes
    double alarm_fraction = 0.0;
};

// Simulate `reps` independent null streams of length gamma, record the
// per-run maxima of S_diag and S_off, and return their empirical
// (1 - q)-quantiles.  Deterministic given the seed; repetitions may be
// spread over `threads` workers.
MonteCarloThresholds monte_carlo_thresholds(const ScaleGrid& grid, std::int64_t gamma, double a,
                                            Variant variant, int reps, std::uint64_t seed,
                                            double q_diag = 0.5, double q_off = 0.5,
                                            int threads = 1);

std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

// Preset file round-trip (JSON).
void write_preset_file(const std::string& path, const TuningPreset& preset);
TuningPreset read_preset_file(const std::string& path);

}  // namespace ocd
