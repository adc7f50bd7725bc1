#include "ocd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ocd/format.hpp"
#include "ocd/parallel.hpp"

namespace ocd {

SignalShape shape_from_name(const std::string& name) {
    if (name == "sphere") {
        return SignalShape::SphereUniform;
    }
    if (name == "uniform") {
        return SignalShape::Uniform;
    }
    if (name == "inv-sqrt") {
        return SignalShape::InvSqrt;
    }
    if (name == "harmonic") {
        return SignalShape::Harmonic;
    }
    if (name == "explicit") {
        return SignalShape::Explicit;
    }
    throw std::invalid_argument("unknown signal shape: " + name);
}

std::string shape_name(SignalShape shape) {
    switch (shape) {
        case SignalShape::SphereUniform:
            return "sphere";
        case SignalShape::Uniform:
            return "uniform";
        case SignalShape::InvSqrt:
            return "inv-sqrt";
        case SignalShape::Harmonic:
            return "harmonic";
        case SignalShape::Explicit:
            return "explicit";
    }
    return "sphere";
}

std::vector<double> sample_signal(int p, int s, double vartheta, SignalShape shape, Rng& rng) {
    if (s < 1 || s > p) {
        throw std::invalid_argument("sample_signal: need 1 <= s <= p");
    }
    if (!(vartheta > 0.0)) {
        throw std::invalid_argument("sample_signal: vartheta must be positive");
    }
    std::vector<double> theta(static_cast<std::size_t>(p), 0.0);
    if (shape == SignalShape::SphereUniform) {
        std::vector<int> index(static_cast<std::size_t>(p));
        std::iota(index.begin(), index.end(), 0);
        for (int i = 0; i < s; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) + rng.uniform_index(static_cast<std::uint64_t>(p - i));
            std::swap(index[static_cast<std::size_t>(i)], index[j]);
        }
        double norm2 = 0.0;
        std::vector<double> g(static_cast<std::size_t>(s));
        do {
            norm2 = 0.0;
            for (int i = 0; i < s; ++i) {
                g[static_cast<std::size_t>(i)] = rng.gaussian();
                norm2 += g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];
            }
        } while (norm2 == 0.0);
        const double scale = vartheta / std::sqrt(norm2);
        for (int i = 0; i < s; ++i) {
            theta[static_cast<std::size_t>(index[static_cast<std::size_t>(i)])] =
                scale * g[static_cast<std::size_t>(i)];
        }
        return theta;
    }
    if (shape == SignalShape::Explicit) {
        throw std::invalid_argument("sample_signal: explicit shape carries its own vector");
    }
    double norm2 = 0.0;
    for (int j = 0; j < s; ++j) {
        double w = 1.0;
        if (shape == SignalShape::InvSqrt) {
            w = 1.0 / std::sqrt(static_cast<double>(j + 1));
        } else if (shape == SignalShape::Harmonic) {
            w = 1.0 / static_cast<double>(j + 1);
        }
        theta[static_cast<std::size_t>(j)] = w;
        norm2 += w * w;
    }
    const double scale = vartheta / std::sqrt(norm2);
    for (int j = 0; j < s; ++j) {
        theta[static_cast<std::size_t>(j)] *= scale;
    }
    return theta;
}

EffectiveSupportReport effective_support(std::span<const double> theta, const ScaleGrid& grid) {
    const int p = static_cast<int>(theta.size());
    if (p != grid.p()) {
        throw std::invalid_argument("effective_support: theta length does not match the grid");
    }
    double norm2 = 0.0;
    for (const double v : theta) {
        norm2 += v * v;
    }
    if (norm2 == 0.0) {
        throw std::invalid_argument("effective_support: theta must be non-zero");
    }
    const double vth = std::sqrt(norm2);
    const double log2_2p = std::log2(2.0 * p);

    EffectiveSupportReport report;
    for (int j = 0; j < p; ++j) {
        if (std::fabs(theta[static_cast<std::size_t>(j)]) >= grid.b_min()) {
            report.beta_support.push_back(j);
        }
    }
    std::vector<int> set;
    for (int s = 1; s <= p; s *= 2) {
        const double threshold = vth / std::sqrt(static_cast<double>(s) * log2_2p);
        set.clear();
        for (int j = 0; j < p; ++j) {
            if (std::fabs(theta[static_cast<std::size_t>(j)]) >= threshold) {
                set.push_back(j);
            }
        }
        report.s_eff = s;
        report.effective = set;
        if (static_cast<int>(set.size()) >= s) {
            return report;
        }
    }
    return report;  // largest dyadic s as a fallback
}

namespace {

struct RepRecord {
    bool declared = false;
    bool false_alarm = false;
    bool covered = false;
    bool post_change = false;  // declared with N > z
    double delay = 0.0;
    double length = 0.0;
    bool fp_free = false;
    bool fn_free = false;
};

std::int64_t default_horizon(const ChangeScenario& scenario, const DetectorConfig& det_cfg) {
    int s_used = scenario.s;
    if (scenario.shape == SignalShape::Explicit) {
        s_used = 0;
        for (const double v : scenario.theta) {
            if (v != 0.0) {
                ++s_used;
            }
        }
        s_used = std::max(s_used, 1);
    }
    const double beta = det_cfg.grid.beta();
    const double guess = s_used * std::log2(2.0 * scenario.p) *
                             std::max(det_cfg.t_diag, 1.0) / (beta * beta) +
                         1.0;
    return scenario.z + 50 * static_cast<std::int64_t>(std::ceil(std::max(guess, 1.0)));
}

std::vector<double> scenario_theta(const ChangeScenario& scenario, Rng& rng) {
    if (scenario.shape == SignalShape::Explicit) {
        if (static_cast<int>(scenario.theta.size()) != scenario.p) {
            throw std::invalid_argument("scenario: explicit theta has wrong length");
        }
        return scenario.theta;
    }
    return sample_signal(scenario.p, scenario.s, scenario.vartheta, scenario.shape, rng);
}

bool theta_is_zero(std::span<const double> theta) {
    return std::all_of(theta.begin(), theta.end(), [](double v) { return v == 0.0; });
}

bool contains_all(std::span<const int> sorted_haystack, std::span<const int> sorted_needles,
                  int extra_member) {
    for (const int want : sorted_needles) {
        if (want == extra_member) {
            continue;
        }
        if (!std::binary_search(sorted_haystack.begin(), sorted_haystack.end(), want)) {
            return false;
        }
    }
    return true;
}

bool subset_of(std::span<const int> sorted_small, std::span<const int> sorted_big) {
    for (const int member : sorted_small) {
        if (!std::binary_search(sorted_big.begin(), sorted_big.end(), member)) {
            return false;
        }
    }
    return true;
}

double proportion_se(double phat, int n) {
    return n > 0 ? std::sqrt(phat * (1.0 - phat) / n) : 0.0;
}

}  // namespace

ExperimentReport run_coverage_experiment(const ChangeScenario& scenario,
                                         const DetectorConfig& det_cfg,
                                         const InferenceConfig& inf_cfg, int reps,
                                         std::uint64_t seed, int threads,
                                         std::int64_t horizon_cap) {
    if (reps < 1) {
        throw std::invalid_argument("run_coverage_experiment: reps must be positive");
    }
    const std::int64_t horizon = horizon_cap > 0 ? horizon_cap : default_horizon(scenario, det_cfg);
    std::vector<RepRecord> records(static_cast<std::size_t>(reps));

    parallel_for(reps, threads, [&](std::int64_t rep) {
        Rng rng = Rng::for_rep(seed, static_cast<std::uint64_t>(rep));
        const std::vector<double> theta = scenario_theta(scenario, rng);
        const std::int64_t z = scenario.z;
        std::int64_t drawn = 0;
        const VectorSource source = [&](std::span<double> out) {
            ++drawn;
            const bool post = drawn > z;
            for (int j = 0; j < scenario.p; ++j) {
                out[static_cast<std::size_t>(j)] =
                    rng.gaussian() + (post ? theta[static_cast<std::size_t>(j)] : 0.0);
            }
            return true;
        };
        const RunOutcome run = run_ocd_ci(source, det_cfg, inf_cfg, horizon);
        RepRecord& rec = records[static_cast<std::size_t>(rep)];
        rec.declared = run.declared;
        if (!run.declared) {
            return;
        }
        const std::int64_t n = run.declaration.n;
        rec.false_alarm = n <= z;
        rec.covered = run.inference.ci_left <= z && z <= run.inference.ci_right;
        rec.post_change = n > z;
        if (rec.post_change) {
            rec.delay = static_cast<double>(n - z);
            rec.length = static_cast<double>(run.inference.ci_right - run.inference.ci_left);
        }
        if (theta_is_zero(theta)) {
            rec.fp_free = run.inference.support.empty();
            rec.fn_free = true;
        } else {
            const EffectiveSupportReport es = effective_support(theta, det_cfg.grid);
            rec.fp_free = subset_of(run.inference.support, es.beta_support);
            rec.fn_free = contains_all(run.inference.support, es.effective,
                                       run.inference.anchor.coord);
        }
    });

    ExperimentReport report;
    report.reps = reps;
    int covered = 0;
    int false_alarms = 0;
    int post = 0;
    int fp_free = 0;
    int fn_free = 0;
    double delay_sum = 0.0;
    double delay_sq = 0.0;
    double len_sum = 0.0;
    double len_sq = 0.0;
    for (const RepRecord& rec : records) {
        if (!rec.declared) {
            ++report.censored;
            continue;
        }
        ++report.declared;
        covered += rec.covered ? 1 : 0;
        false_alarms += rec.false_alarm ? 1 : 0;
        fp_free += rec.fp_free ? 1 : 0;
        fn_free += rec.fn_free ? 1 : 0;
        if (rec.post_change) {
            ++post;
            delay_sum += rec.delay;
            delay_sq += rec.delay * rec.delay;
            len_sum += rec.length;
            len_sq += rec.length * rec.length;
        }
    }
    const int d = report.declared;
    report.coverage = d > 0 ? static_cast<double>(covered) / d : std::nan("");
    report.coverage_se = proportion_se(report.coverage, d);
    report.false_alarm_rate = static_cast<double>(false_alarms) / reps;
    report.support_fp_free_rate = d > 0 ? static_cast<double>(fp_free) / d : std::nan("");
    report.support_fn_free_rate = d > 0 ? static_cast<double>(fn_free) / d : std::nan("");
    if (post > 0) {
        report.mean_delay = delay_sum / post;
        report.mean_ci_length = len_sum / post;
        if (post > 1) {
            const double dvar = (delay_sq - delay_sum * delay_sum / post) / (post - 1);
            const double lvar = (len_sq - len_sum * len_sum / post) / (post - 1);
            report.delay_se = std::sqrt(std::max(dvar, 0.0) / post);
            report.ci_length_se = std::sqrt(std::max(lvar, 0.0) / post);
        }
    } else {
        report.mean_delay = std::nan("");
        report.mean_ci_length = std::nan("");
    }
    return report;
}

std::vector<SupportRocRow> run_support_experiment(const ChangeScenario& scenario,
                                                  const DetectorConfig& det_cfg,
                                                  const InferenceConfig& inf_cfg,
                                                  std::span<const double> d1_values, int reps,
                                                  std::uint64_t seed, int threads,
                                                  std::int64_t horizon_cap) {
    if (reps < 1) {
        throw std::invalid_argument("run_support_experiment: reps must be positive");
    }
    if (d1_values.empty()) {
        throw std::invalid_argument("run_support_experiment: need at least one d1 value");
    }
    const std::int64_t horizon = horizon_cap > 0 ? horizon_cap : default_horizon(scenario, det_cfg);
    const int p = scenario.p;
    const std::size_t nd = d1_values.size();

    struct RepSupport {
        bool declared = false;
        std::vector<std::uint8_t> fp_free;    // per d1
        std::vector<std::uint8_t> fn_free;    // per d1
        std::vector<std::uint8_t> selected;   // per d1, per coordinate
    };
    std::vector<RepSupport> records(static_cast<std::size_t>(reps));

    parallel_for(reps, threads, [&](std::int64_t rep) {
        Rng rng = Rng::for_rep(seed, static_cast<std::uint64_t>(rep));
        const std::vector<double> theta = scenario_theta(scenario, rng);
        const std::int64_t z = scenario.z;
        std::int64_t drawn = 0;
        const VectorSource source = [&](std::span<double> out) {
            ++drawn;
            const bool post = drawn > z;
            for (int j = 0; j < p; ++j) {
                out[static_cast<std::size_t>(j)] =
                    rng.gaussian() + (post ? theta[static_cast<std::size_t>(j)] : 0.0);
            }
            return true;
        };

        Detector det(det_cfg);
        std::vector<double> buf(static_cast<std::size_t>(p));
        bool declared = false;
        for (std::int64_t i = 0; i < horizon; ++i) {
            if (!source(buf)) {
                break;
            }
            if (det.step(buf).declared) {
                declared = true;
                break;
            }
        }
        RepSupport& rec = records[static_cast<std::size_t>(rep)];
        rec.declared = declared;
        if (!declared) {
            return;
        }
        const std::int64_t want = det_cfg.variant == Variant::OcdPrime ? inf_cfg.ell : 0;
        std::vector<std::vector<double>> extras;
        extras.reserve(static_cast<std::size_t>(want));
        for (std::int64_t i = 0; i < want; ++i) {
            source(buf);
            extras.emplace_back(buf);
        }
        const auto [anchor, xi] = select_anchor(det, extras);
        const EffectiveSupportReport es = effective_support(theta, det_cfg.grid);

        rec.fp_free.assign(nd, 0);
        rec.fn_free.assign(nd, 0);
        rec.selected.assign(nd * static_cast<std::size_t>(p), 0);
        for (std::size_t di = 0; di < nd; ++di) {
            const SupportEstimate sup = estimate_support(xi, anchor, det_cfg.grid, d1_values[di]);
            rec.fp_free[di] = subset_of(sup.coords, es.beta_support) ? 1 : 0;
            rec.fn_free[di] = contains_all(sup.coords, es.effective, anchor.coord) ? 1 : 0;
            std::uint8_t* sel = rec.selected.data() + di * static_cast<std::size_t>(p);
            sel[anchor.coord] = 1;
            for (const int j : sup.coords) {
                sel[j] = 1;
            }
        }
    });

    std::vector<SupportRocRow> rows(nd);
    for (std::size_t di = 0; di < nd; ++di) {
        SupportRocRow& row = rows[di];
        row.d1 = d1_values[di];
        row.reps = reps;
        row.selection_freq.assign(static_cast<std::size_t>(p), 0.0);
        int fp = 0;
        int fn = 0;
        for (const RepSupport& rec : records) {
            if (!rec.declared) {
                continue;
            }
            ++row.declared;
            fp += rec.fp_free[di];
            fn += rec.fn_free[di];
            const std::uint8_t* sel = rec.selected.data() + di * static_cast<std::size_t>(p);
            for (int j = 0; j < p; ++j) {
                row.selection_freq[static_cast<std::size_t>(j)] += sel[j];
            }
        }
        const int d = row.declared;
        row.fp_free = d > 0 ? static_cast<double>(fp) / d : std::nan("");
        row.fn_free = d > 0 ? static_cast<double>(fn) / d : std::nan("");
        row.fp_free_se = proportion_se(row.fp_free, d);
        row.fn_free_se = proportion_se(row.fn_free, d);
        for (double& f : row.selection_freq) {
            f = d > 0 ? f / d : std::nan("");
        }
    }
    return rows;
}

namespace {

void write_context_header(std::ostream& out) {
    out << "p,s,vartheta,beta,z,gamma,alpha,variant,shape,a,t_diag,t_off,d1,d2,ell,reps,seed";
}

void write_context_row(std::ostream& out, const ReportContext& ctx, int reps) {
    out << ctx.scenario.p << ',' << ctx.scenario.s << ',' << format_number(ctx.scenario.vartheta)
        << ',' << format_number(ctx.det_cfg.grid.beta()) << ',' << ctx.scenario.z << ','
        << format_number(ctx.gamma) << ',' << format_number(ctx.inf_cfg.alpha) << ','
        << (ctx.det_cfg.variant == Variant::Ocd ? "ocd" : "ocd-prime") << ','
        << shape_name(ctx.scenario.shape) << ',' << format_number(ctx.det_cfg.a) << ','
        << format_number(ctx.det_cfg.t_diag) << ',' << format_number(ctx.det_cfg.t_off) << ','
        << format_number(ctx.inf_cfg.d1) << ',' << format_number(ctx.inf_cfg.d2) << ','
        << ctx.inf_cfg.ell << ',' << reps << ',' << ctx.seed;
}

}  // namespace

void write_coverage_report_csv(std::ostream& out, const ReportContext& ctx,
                               const ExperimentReport& report) {
    write_context_header(out);
    out << ",declared,censored,coverage,coverage_se,mean_ci_length,ci_length_se,mean_delay,"
           "delay_se,false_alarm_rate,support_fp_free,support_fn_free\n";
    write_context_row(out, ctx, report.reps);
    out << ',' << report.declared << ',' << report.censored << ','
        << format_number(report.coverage) << ',' << format_number(report.coverage_se) << ','
        << format_number(report.mean_ci_length) << ',' << format_number(report.ci_length_se)
        << ',' << format_number(report.mean_delay) << ',' << format_number(report.delay_se) << ','
        << format_number(report.false_alarm_rate) << ','
        << format_number(report.support_fp_free_rate) << ','
        << format_number(report.support_fn_free_rate) << "\n";
}

void write_support_report_csv(std::ostream& out, const ReportContext& ctx,
                              std::span<const SupportRocRow> rows) {
    write_context_header(out);
    out << ",d1,declared,fp_free,fp_free_se,fn_free,fn_free_se\n";
    for (const SupportRocRow& row : rows) {
        write_context_row(out, ctx, row.reps);
        out << ',' << format_number(row.d1) << ',' << row.declared << ','
            << format_number(row.fp_free) << ',' << format_number(row.fp_free_se) << ','
            << format_number(row.fn_free) << ',' << format_number(row.fn_free_se) << "\n";
    }
}

void write_selection_freq_csv(std::ostream& out, std::span<const SupportRocRow> rows) {
    out << "d1,coordinate,selection_freq\n";
    for (const SupportRocRow& row : rows) {
        for (std::size_t j = 0; j < row.selection_freq.size(); ++j) {
            out << format_number(row.d1) << ',' << (j + 1) << ','
                << format_number(row.selection_freq[j]) << "\n";
        }
    }
}

}  // namespace ocd
