#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ocd/scale_grid.hpp"

namespace ocd {

// Ocd: off-diagonal statistics from the full tail sums (t, A).
// OcdPrime: off-diagonal statistics from the dyadically reduced tails
// (tau, Lambda), which guarantees that shortly after the change the
// reduced window contains post-change data only.
enum class Variant { Ocd, OcdPrime };

struct DetectorConfig {
    ScaleGrid grid;
    double a = 0.0;        // hard-threshold level inside the Q aggregates
    double t_diag = 0.0;   // declaration threshold for the diagonal statistic
    double t_off = 0.0;    // declaration threshold for the off-diagonal statistic
    Variant variant = Variant::Ocd;
};

struct Declaration {
    std::int64_t n = 0;    // stopping time
    int coord = 0;         // anchor coordinate (0-based)
    int scale_index = 0;   // signed index of the anchor scale within the grid
    double scale = 0.0;    // signed anchor scale value
};

struct StepOutcome {
    bool declared = false;
    double s_diag = 0.0;
    double s_off = 0.0;
    Declaration declaration;  // valid only when declared
};

// Streaming state machine over p-variate observations.  Memory footprint
// is a function of (p, variant) only.  Single writer: one stream feeds one
// detector; distinct detectors may run on distinct threads.
class Detector {
public:
    explicit Detector(DetectorConfig config);

    // Consume one observation; throws std::invalid_argument on dimension
    // mismatch and std::logic_error if called after declaration.
    StepOutcome step(std::span<const double> x);

    const DetectorConfig& config() const { return cfg_; }
    const ScaleGrid& grid() const { return cfg_.grid; }
    int p() const { return p_; }
    int num_scales() const { return n_scales_; }
    std::int64_t n() const { return n_; }
    bool declared() const { return declared_; }
    double last_s_diag() const { return last_s_diag_; }
    double last_s_off() const { return last_s_off_; }

    std::int64_t tail_length(int k, int j) const { return t_[idx(k, j)]; }
    // reduced tail length tau (OcdPrime only)
    std::int64_t reduced_tail_length(int k, int j) const;
    // diagonal entry of the tail sum matrix A
    double tail_sum_diag(int k, int j) const;
    // full column of A (Ocd only; OcdPrime keeps only the diagonal of A)
    std::span<const double> tail_sum_column(int k, int j) const;
    // full column of Lambda (OcdPrime only)
    std::span<const double> reduced_sum_column(int k, int j) const;

    // Column and tail length feeding the E/Q statistics for this variant.
    std::span<const double> stat_column(int k, int j) const;
    std::int64_t stat_tail(int k, int j) const;

    // E and Q recomputed from the current state; q_value reproduces the
    // step loop's accumulation order exactly.
    double e_value(int k, int j_prime, int j) const;
    double q_value(int k, int j) const;

    // Tie-ordered argmax of Q over [p] x B: smallest coordinate first, then
    // smallest scale magnitude, then positive sign before negative.
    Declaration argmax_q() const;

    // Versioned little-endian state image; restore() round-trips bit-exactly.
    std::vector<std::uint8_t> snapshot() const;
    static Detector restore(std::span<const std::uint8_t> bytes);

    // Bytes owned by the state buffers; constant over the detector's life.
    std::size_t state_bytes() const;

private:
    std::size_t idx(int k, int j) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(p_) +
               static_cast<std::size_t>(j);
    }
    std::size_t col_offset(int k, int j) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(p_) +
                static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(p_);
    }
    void step_ocd(const double* x, double& smax, double& qmax);
    void step_prime(const double* x, double& smax, double& qmax);

    DetectorConfig cfg_;
    int p_;
    int n_scales_;
    std::int64_t n_ = 0;
    bool declared_ = false;
    double last_s_diag_ = 0.0;
    double last_s_off_ = 0.0;

    std::vector<std::int64_t> t_;  // [scale][coord]
    // Ocd: full A matrices, column-major per scale.  OcdPrime: only the
    // diagonal of A is ever read, so just that is kept, plus the reduced
    // tail machinery.
    std::vector<double> asum_;          // Ocd: [scale][col j][row j']
    std::vector<double> adiag_;         // OcdPrime: [scale][coord]
    std::vector<std::int64_t> tau_;     // OcdPrime
    std::vector<std::int64_t> tau_pend_;
    std::vector<double> lam_;           // OcdPrime: [scale][col j][row j']
    std::vector<double> lam_pend_;
};

}  // namespace ocd
