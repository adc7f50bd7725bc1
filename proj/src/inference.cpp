#include "ocd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ocd/normal.hpp"

namespace ocd {

XiStatistics compute_xi(const Detector& det, std::span<const std::vector<double>> extras) {
    const int p = det.p();
    const int ns = det.num_scales();
    if (det.config().variant == Variant::Ocd && !extras.empty()) {
        throw std::invalid_argument("compute_xi: extra sampling requires the OcdPrime variant");
    }
    std::vector<double> extra_sum(static_cast<std::size_t>(p), 0.0);
    for (const auto& row : extras) {
        if (static_cast<int>(row.size()) != p) {
            throw std::invalid_argument("compute_xi: extra observation has wrong length");
        }
        for (int i = 0; i < p; ++i) {
            extra_sum[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
        }
    }
    const std::int64_t ell = static_cast<std::int64_t>(extras.size());
    const double a2 = det.config().a * det.config().a;

    XiStatistics xs;
    xs.p = p;
    xs.num_scales = ns;
    xs.ell = ell;
    xs.xi.resize(static_cast<std::size_t>(ns) * p * p);
    xs.eff_tail.resize(static_cast<std::size_t>(ns) * p);
    xs.q_tilde.assign(static_cast<std::size_t>(ns) * p, 0.0);

    for (int k = 0; k < ns; ++k) {
        for (int j = 0; j < p; ++j) {
            const std::int64_t eff = det.stat_tail(k, j) + ell;
            xs.eff_tail[static_cast<std::size_t>(k) * p + j] = eff;
            const double teff = static_cast<double>(std::max<std::int64_t>(eff, 1));
            const double denom = std::sqrt(teff);
            const std::span<const double> col = det.stat_column(k, j);
            double* out = xs.xi.data() + (static_cast<std::size_t>(k) * p + j) * p;
            // accumulate the aggregate on the raw sums so that with ell = 0
            // it reproduces the detector's Q bit for bit
            const double cutoff = a2 * teff;
            double acc = 0.0;
            for (int i = 0; i < p; ++i) {
                const double c = col[static_cast<std::size_t>(i)] + extra_sum[static_cast<std::size_t>(i)];
                out[i] = c / denom;
                const double cc = c * c;
                acc += (cc >= cutoff) ? cc : 0.0;
            }
            if (det.grid().in_off_set(k)) {
                const double dj = col[static_cast<std::size_t>(j)] + extra_sum[static_cast<std::size_t>(j)];
                const double dd = dj * dj;
                if (dd >= cutoff) {
                    acc -= dd;
                }
                xs.q_tilde[static_cast<std::size_t>(k) * p + j] = acc / teff;
            }
        }
    }
    return xs;
}

std::pair<Declaration, XiStatistics> select_anchor(const Detector& det,
                                                   std::span<const std::vector<double>> extras) {
    if (!det.declared()) {
        throw std::logic_error("select_anchor: detector has not declared");
    }
    XiStatistics xs = compute_xi(det, extras);
    Declaration decl;
    decl.n = det.n();
    decl.coord = 0;
    decl.scale_index = 2;
    decl.scale = det.grid().signed_scale(2);
    double best_q = -1.0;
    for (int j = 0; j < xs.p; ++j) {
        for (int k = 2; k < xs.num_scales; ++k) {
            const double q = xs.q(k, j);
            if (q > best_q) {
                best_q = q;
                decl.coord = j;
                decl.scale_index = k;
                decl.scale = det.grid().signed_scale(k);
            }
        }
    }
    return {decl, std::move(xs)};
}

SupportEstimate estimate_support(const XiStatistics& xi, const Declaration& anchor,
                                 const ScaleGrid& grid, double d1) {
    SupportEstimate est;
    const int p = xi.p;
    const double root = std::sqrt(static_cast<double>(xi.tail(anchor.scale_index, anchor.coord)));
    const std::span<const double> positive = grid.positive_scales();
    for (int j = 0; j < p; ++j) {
        if (j == anchor.coord) {
            continue;
        }
        const double v = xi.at(anchor.scale_index, j, anchor.coord);
        const double abs_v = std::fabs(v);
        if (abs_v - grid.b_min() * root < d1) {
            continue;
        }
        // largest positive scale still certified by the d1 margin; b_min
        // qualifies by the test above, so the scan cannot come up empty
        int best_mag = 0;
        for (int m = static_cast<int>(positive.size()) - 1; m >= 0; --m) {
            if (abs_v - positive[static_cast<std::size_t>(m)] * root >= d1) {
                best_mag = m;
                break;
            }
        }
        const int signed_index = 2 * best_mag + (v >= 0.0 ? 0 : 1);
        est.coords.push_back(j);
        est.scale_index.push_back(signed_index);
        est.scale.push_back(grid.signed_scale(signed_index));
    }
    return est;
}

std::pair<std::int64_t, std::int64_t> build_confidence_interval(const Detector& det,
                                                                const SupportEstimate& support,
                                                                double d2) {
    const std::int64_t n = det.n();
    if (support.coords.empty()) {
        return {0, n};
    }
    double budget = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < support.coords.size(); ++i) {
        const std::int64_t t = det.tail_length(support.scale_index[i], support.coords[i]);
        const double b = support.scale[i];
        budget = std::min(budget, static_cast<double>(t) + d2 / (b * b));
    }
    const double left = std::floor(static_cast<double>(n) - budget);
    return {std::max<std::int64_t>(static_cast<std::int64_t>(left), 0), n};
}

std::pair<std::int64_t, std::int64_t> univariate_ci(std::int64_t n, std::int64_t tail, double b,
                                                    double alpha) {
    if (tail < 0 || tail > n) {
        throw std::invalid_argument("univariate_ci: tail must lie in [0, n]");
    }
    if (!(b > 0.0)) {
        throw std::invalid_argument("univariate_ci: scale must be positive");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("univariate_ci: alpha must lie in (0,1)");
    }
    const double z = normal_quantile(1.0 - alpha / 4.0);
    const double slack = 4.0 * z * z / (b * b);
    const double left = std::floor(static_cast<double>(n - tail) - slack);
    return {std::max<std::int64_t>(static_cast<std::int64_t>(left), 0), n};
}

InferenceResult infer(const Detector& det, std::span<const std::vector<double>> extras,
                      const InferenceConfig& cfg) {
    if (static_cast<std::int64_t>(extras.size()) != cfg.ell) {
        throw std::invalid_argument("infer: expected " + std::to_string(cfg.ell) +
                                    " extra observations, got " + std::to_string(extras.size()));
    }
    auto [decl, xi] = select_anchor(det, extras);
    SupportEstimate sup = estimate_support(xi, decl, det.grid(), cfg.d1);
    auto [left, right] = build_confidence_interval(det, sup, cfg.d2);

    InferenceResult res;
    res.anchor = decl;
    res.support = std::move(sup.coords);
    res.support_scale_index = std::move(sup.scale_index);
    res.support_scale = std::move(sup.scale);
    res.ci_left = left;
    res.ci_right = right;
    res.uninformative_left = res.support.empty();
    return res;
}

RunOutcome run_ocd_ci(const VectorSource& source, const DetectorConfig& det_cfg,
                      const InferenceConfig& inf_cfg, std::int64_t max_steps) {
    Detector det(det_cfg);
    const int p = det.p();
    std::vector<double> buf(static_cast<std::size_t>(p));
    RunOutcome out;
    while ((max_steps <= 0 || out.n_consumed < max_steps) && source(buf)) {
        ++out.n_consumed;
        const StepOutcome step = det.step(buf);
        if (!step.declared) {
            continue;
        }
        out.declared = true;
        out.declaration = step.declaration;
        const std::int64_t want = det_cfg.variant == Variant::OcdPrime ? inf_cfg.ell : 0;
        std::vector<std::vector<double>> extras;
        extras.reserve(static_cast<std::size_t>(want));
        for (std::int64_t i = 0; i < want && source(buf); ++i) {
            ++out.n_consumed;
            extras.emplace_back(buf);
        }
        out.ell_used = static_cast<std::int64_t>(extras.size());
        InferenceConfig used = inf_cfg;
        used.ell = out.ell_used;
        out.inference = infer(det, extras, used);
        return out;
    }
    return out;
}

}  // namespace ocd
