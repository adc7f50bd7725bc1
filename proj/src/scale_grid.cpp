#include "ocd/scale_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ocd {

ScaleGrid::ScaleGrid(int p, double beta) : p_(p), beta_(beta) {
    if (p < 2) {
        throw std::invalid_argument("ScaleGrid: p must be at least 2, got " + std::to_string(p));
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("ScaleGrid: beta must be positive and finite");
    }
    const double log2_2p = std::log2(2.0 * p);
    levels_ = static_cast<int>(std::floor(log2_2p));
    const double b_min = beta / std::sqrt(std::exp2(static_cast<double>(levels_)) * log2_2p);

    positive_.resize(static_cast<std::size_t>(levels_) + 1);
    for (int l = 0; l <= levels_; ++l) {
        // exp2 keeps even levels exact powers of two times b_min
        positive_[static_cast<std::size_t>(l)] = b_min * std::exp2(0.5 * l);
    }
}

int ScaleGrid::index_of_signed(double b) const {
    for (int k = 0; k < num_signed(); ++k) {
        if (signed_scale(k) == b) {
            return k;
        }
    }
    return -1;
}

}  // namespace ocd
