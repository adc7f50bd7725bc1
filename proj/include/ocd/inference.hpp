#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ocd/detector.hpp"

namespace ocd {

struct InferenceConfig {
    double d1 = 1.0;        // support threshold margin
    double d2 = 4.0;        // confidence interval slack, default 4*d1^2
    std::int64_t ell = 0;   // extra post-declaration observations (OcdPrime only)
    double alpha = 0.05;    // nominal miscoverage, carried for reporting only
};

// Post-declaration statistics: Xi entries, their effective tails, and the
// Q-tilde aggregates, over all coordinates and signed scales.  With ell = 0
// these reduce exactly to the detector's E and Q.
struct XiStatistics {
    int p = 0;
    int num_scales = 0;
    std::int64_t ell = 0;
    std::vector<double> xi;              // [(k*p + j)*p + j']
    std::vector<std::int64_t> eff_tail;  // [k*p + j]: (tau or t) + ell
    std::vector<double> q_tilde;         // [k*p + j], zero outside B

    double at(int k, int j_prime, int j) const {
        return xi[(static_cast<std::size_t>(k) * p + j) * static_cast<std::size_t>(p) + j_prime];
    }
    std::int64_t tail(int k, int j) const {
        return eff_tail[static_cast<std::size_t>(k) * p + j];
    }
    double q(int k, int j) const { return q_tilde[static_cast<std::size_t>(k) * p + j]; }
};

struct SupportEstimate {
    std::vector<int> coords;        // ascending, anchor excluded
    std::vector<int> scale_index;   // signed grid index of b-tilde, parallel to coords
    std::vector<double> scale;      // signed b-tilde values
};

struct InferenceResult {
    Declaration anchor;
    std::vector<int> support;
    std::vector<int> support_scale_index;
    std::vector<double> support_scale;
    std::int64_t ci_left = 0;
    std::int64_t ci_right = 0;
    bool uninformative_left = false;  // support was empty, left end clamped to 0
};

// Xi over all (j', j, signed scale) from a declared detector state plus the
// extra observations.  extras must be empty for the Ocd variant.
XiStatistics compute_xi(const Detector& det, std::span<const std::vector<double>> extras);

// Tie-ordered argmax of Q-tilde over [p] x B, plus the statistics it used.
std::pair<Declaration, XiStatistics> select_anchor(const Detector& det,
                                                   std::span<const std::vector<double>> extras);

SupportEstimate estimate_support(const XiStatistics& xi, const Declaration& anchor,
                                 const ScaleGrid& grid, double d1);

// [max{floor(n - min_j (t_j + d2/b_j^2)), 0}, n]; empty support gives [0, n].
std::pair<std::int64_t, std::int64_t> build_confidence_interval(const Detector& det,
                                                                const SupportEstimate& support,
                                                                double d2);

// Single-coordinate interval: [max{floor(N - tail - 4*qnorm(1-alpha/4)^2/b^2), 0}, N].
std::pair<std::int64_t, std::int64_t> univariate_ci(std::int64_t n, std::int64_t tail, double b,
                                                    double alpha);

InferenceResult infer(const Detector& det, std::span<const std::vector<double>> extras,
                      const InferenceConfig& cfg);

// Pull-based observation source: fills the caller's buffer with the next
// vector, or returns false when the stream is exhausted.
using VectorSource = std::function<bool(std::span<double>)>;

struct RunOutcome {
    bool declared = false;
    std::int64_t n_consumed = 0;   // observations read, including extras
    std::int64_t ell_used = 0;     // extras actually obtained (may fall short)
    Declaration declaration;
    InferenceResult inference;
};

// Full pipeline: step loop, extra sampling, anchor, support, interval.
// Running out of data before declaration is an outcome, not an error.
// max_steps > 0 caps the detection phase (extras are still drawn after a
// declaration inside the cap).
RunOutcome run_ocd_ci(const VectorSource& source, const DetectorConfig& det_cfg,
                      const InferenceConfig& inf_cfg, std::int64_t max_steps = 0);

}  // namespace ocd
