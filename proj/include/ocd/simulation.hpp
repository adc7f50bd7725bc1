#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ocd/detector.hpp"
#include "ocd/inference.hpp"
#include "ocd/rng.hpp"
#include "ocd/scale_grid.hpp"

namespace ocd {

enum class SignalShape { SphereUniform, Uniform, InvSqrt, Harmonic, Explicit };

SignalShape shape_from_name(const std::string& name);
std::string shape_name(SignalShape shape);

// Post-change mean generator.  SphereUniform draws s coordinates uniformly
// at random and a uniform direction on the s-sphere; the deterministic
// shapes put weights 1, j^{-1/2}, j^{-1} on the first s coordinates.  All
// outputs have l2-norm vartheta.
std::vector<double> sample_signal(int p, int s, double vartheta, SignalShape shape, Rng& rng);

struct ChangeScenario {
    int p = 2;
    std::int64_t z = 0;               // changepoint: observations after time z carry the shift
    SignalShape shape = SignalShape::SphereUniform;
    int s = 1;
    double vartheta = 1.0;
    std::vector<double> theta;        // used when shape == Explicit
};

struct EffectiveSupportReport {
    int s_eff = 1;                    // effective sparsity
    std::vector<int> effective;       // effective support, ascending
    std::vector<int> beta_support;    // coordinates with |theta_j| >= b_min
};

// Smallest dyadic s whose threshold set {j: |theta_j| >= ||theta||/sqrt(s log2(2p))}
// has at least s members, together with that set and the b_min reference set.
EffectiveSupportReport effective_support(std::span<const double> theta, const ScaleGrid& grid);

struct ExperimentReport {
    int reps = 0;
    int declared = 0;                 // declared within the horizon
    int censored = 0;                 // never declared within the horizon
    double coverage = 0.0;            // over declared runs
    double coverage_se = 0.0;
    double mean_ci_length = 0.0;      // over declared runs with N > z
    double ci_length_se = 0.0;
    double mean_delay = 0.0;          // over declared runs with N > z
    double delay_se = 0.0;
    double false_alarm_rate = 0.0;    // P(N <= z), over all runs
    double support_fp_free_rate = 0.0;  // P(S_hat subset of S_beta), over declared runs
    double support_fn_free_rate = 0.0;  // P(S_hat + anchor covers effective support)
};

// Monte Carlo estimate of coverage, interval length, detection delay and
// support recovery.  Repetition r uses an independent generator derived
// from (seed, r); aggregation is in repetition order, so the report is
// identical for every thread count.  horizon_cap = 0 derives a generous
// detection cap from the scenario.
ExperimentReport run_coverage_experiment(const ChangeScenario& scenario,
                                         const DetectorConfig& det_cfg,
                                         const InferenceConfig& inf_cfg, int reps,
                                         std::uint64_t seed, int threads = 1,
                                         std::int64_t horizon_cap = 0);

struct SupportRocRow {
    double d1 = 0.0;
    int reps = 0;
    int declared = 0;
    double fp_free = 0.0;             // P(S_hat subset of S_beta)
    double fp_free_se = 0.0;
    double fn_free = 0.0;             // P(S_hat + anchor covers effective support)
    double fn_free_se = 0.0;
    std::vector<double> selection_freq;  // per coordinate: P(j in S_hat + anchor)
};

// Support recovery swept over d1.  Detection runs once per repetition; every
// d1 value is evaluated on the same post-declaration statistics.
std::vector<SupportRocRow> run_support_experiment(const ChangeScenario& scenario,
                                                  const DetectorConfig& det_cfg,
                                                  const InferenceConfig& inf_cfg,
                                                  std::span<const double> d1_values, int reps,
                                                  std::uint64_t seed, int threads = 1,
                                                  std::int64_t horizon_cap = 0);

// Context echoed into CSV reports.
struct ReportContext {
    ChangeScenario scenario;
    DetectorConfig det_cfg;
    InferenceConfig inf_cfg;
    double gamma = 0.0;
    std::uint64_t seed = 0;
};

void write_coverage_report_csv(std::ostream& out, const ReportContext& ctx,
                               const ExperimentReport& report);
void write_support_report_csv(std::ostream& out, const ReportContext& ctx,
                              std::span<const SupportRocRow> rows);
// One row per (d1, coordinate): the per-coordinate selection frequencies.
void write_selection_freq_csv(std::ostream& out, std::span<const SupportRocRow> rows);

}  // namespace ocd
