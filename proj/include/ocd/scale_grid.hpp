#pragma once

#include <span>
#include <vector>

namespace ocd {

// Dyadic grid of detection scales derived from the dimension p and the
// lower bound beta on the l2-norm of the mean change.  The positive
// magnitudes are b_min * 2^(l/2) for l = 0..levels with
// levels = floor(log2(2p)); l = 0 is the base set B0, l >= 1 is B.
// Signed scales enumerate as +m0, -m0, +m1, -m1, ... (magnitude
// ascending, positive before negative), which is also the tie-break
// order used by every argmax in the detector.
class ScaleGrid {
public:
    ScaleGrid(int p, double beta);

    int p() const { return p_; }
    double beta() const { return beta_; }
    int levels() const { return levels_; }
    double b_min() const { return positive_[0]; }

    // magnitudes, ascending; index 0 is b_min
    std::span<const double> positive_scales() const { return positive_; }

    int num_signed() const { return 2 * static_cast<int>(positive_.size()); }
    double signed_scale(int k) const {
        double m = positive_[static_cast<std::size_t>(k) / 2];
        return (k % 2 == 0) ? m : -m;
    }
    // true for members of B (the off-diagonal aggregation set), false for B0
    bool in_off_set(int k) const { return k >= 2; }

    // index of the signed scale equal to b, or -1 if b is not on the grid
    int index_of_signed(double b) const;

    bool operator==(const ScaleGrid& other) const {
        return p_ == other.p_ && beta_ == other.beta_;
    }

private:
    int p_;
    double beta_;
    int levels_;
    std::vector<double> positive_;
};

inline ScaleGrid build_scale_grid(int p, double beta) { return ScaleGrid(p, beta); }

}  // namespace ocd
