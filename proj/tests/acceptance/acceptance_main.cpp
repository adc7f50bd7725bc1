// Acceptance suite: one line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ocd/calibration.hpp"
#include "ocd/detector.hpp"
#include "ocd/inference.hpp"
#include "ocd/rng.hpp"
#include "ocd/simulation.hpp"
#include "support/reference.hpp"

using namespace ocd;

namespace {

int failures = 0;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int index, const std::string& name, bool pass, const std::string& details,
            double seconds) {
    std::printf("[%s] %d. %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                details.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) {
        ++failures;
    }
}

int worker_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// ---------------------------------------------------------------------------
// 1. streaming tail lengths equal the enumeration oracle, exactly

void criterion_oracle_equivalence() {
    Timer timer;
    Rng meta(0xACC0);
    long checks = 0;
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const int p = 2 + trial % 3;
        const int n = 1 + static_cast<int>(meta.uniform_index(50));
        const bool integers = trial % 2 == 0;
        const Variant variant = (trial / 2) % 2 == 0 ? Variant::Ocd : Variant::OcdPrime;
        DetectorConfig cfg{ScaleGrid(p, 1.0), 0.0, 1e18, 1e18, variant};
        Detector det(cfg);
        std::vector<std::vector<double>> per_coord(static_cast<std::size_t>(p));
        Rng rng = Rng::for_rep(0xACC1, static_cast<std::uint64_t>(trial));
        for (int i = 0; i < n && ok; ++i) {
            std::vector<double> x(static_cast<std::size_t>(p));
            for (int j = 0; j < p; ++j) {
                x[static_cast<std::size_t>(j)] =
                    integers ? static_cast<double>(rng.uniform_index(7)) - 3.0 : rng.gaussian();
                per_coord[static_cast<std::size_t>(j)].push_back(x[static_cast<std::size_t>(j)]);
            }
            det.step(x);
            for (int k = 0; k < det.num_scales() && ok; ++k) {
                for (int j = 0; j < p; ++j) {
                    const std::int64_t want = testref::tail_length_oracle(
                        per_coord[static_cast<std::size_t>(j)], cfg.grid.signed_scale(k));
                    ++checks;
                    if (det.tail_length(k, j) != want) {
                        ok = false;
                        detail = "mismatch at trial " + std::to_string(trial);
                        break;
                    }
                }
            }
        }
    }
    if (ok) {
        detail = std::to_string(checks) + " prefix comparisons, all exact";
    }
    report(1, "oracle equivalence of streaming tail lengths", ok, detail, timer.seconds());
}

// ---------------------------------------------------------------------------
// 2. dyadic reduced tails stay inside [t/2, 3t/4] for t >= 2

void criterion_tau_bounds() {
    Timer timer;
    bool ok = true;
    long steps = 0;
    long states = 0;
    DetectorConfig cfg{ScaleGrid(4, 1.0), 0.0, 1e18, 1e18, Variant::OcdPrime};
    for (int run = 0; run < 25 && ok; ++run) {
        Detector det(cfg);
        Rng rng = Rng::for_rep(0xACC2, static_cast<std::uint64_t>(run));
        const double drift = 0.3 * static_cast<double>(run % 5);
        for (int i = 0; i < 4000 && ok; ++i) {
            std::vector<double> x(4);
            for (double& v : x) {
                v = run % 3 == 0 ? static_cast<double>(rng.uniform_index(5)) - 2.0
                                 : rng.gaussian() + drift;
            }
            det.step(x);
            ++steps;
            for (int k = 0; k < det.num_scales(); ++k) {
                for (int j = 0; j < 4; ++j) {
                    const std::int64_t t = det.tail_length(k, j);
                    const std::int64_t tau = det.reduced_tail_length(k, j);
                    ++states;
                    const bool good = t <= 1 ? tau == t : (2 * tau >= t && 4 * tau <= 3 * t);
                    if (!good) {
                        ok = false;
                        break;
                    }
                }
            }
        }
    }
    report(2, "reduced-tail dyadic bounds", ok,
           std::to_string(steps) + " steps / " + std::to_string(states) + " states checked",
           timer.seconds());
}

// ---------------------------------------------------------------------------
// 3. single-coordinate interval coverage at a calibrated stopping time

void criterion_univariate_coverage() {
    Timer timer;
    const std::int64_t z = 100;
    const double alpha = 0.05;

    // calibrate the stopping threshold so that P(N < z) <= alpha/2
    const int calib_reps = 4000;
    std::vector<double> maxima(calib_reps);
    for (int r = 0; r < calib_reps; ++r) {
        Rng rng = Rng::for_rep(0xACC3, static_cast<std::uint64_t>(r));
        double cusum = 0.0;
        double peak = 0.0;
        for (std::int64_t i = 0; i < z - 1; ++i) {
            cusum = std::max(cusum + rng.gaussian() - 0.5, 0.0);
            peak = std::max(peak, cusum);
        }
        maxima[static_cast<std::size_t>(r)] = peak;
    }
    std::sort(maxima.begin(), maxima.end());
    const double threshold =
        maxima[static_cast<std::size_t>(std::ceil(0.975 * calib_reps)) - 1];

    const int reps = 2000;
    int covered = 0;
    for (int r = 0; r < reps; ++r) {
        Rng rng = Rng::for_rep(0xACC4, static_cast<std::uint64_t>(r));
        double cusum = 0.0;
        std::int64_t tail = 0;
        std::int64_t n = 0;
        while (n < z + 5000) {
            ++n;
            const double x = rng.gaussian() + (n > z ? 1.0 : 0.0);
            cusum = std::max(cusum + x - 0.5, 0.0);
            tail = cusum == 0.0 ? 0 : tail + 1;
            if (cusum >= threshold) {
                break;
            }
        }
        const auto [left, right] = univariate_ci(n, tail, 1.0, alpha);
        covered += (left <= z && z <= right) ? 1 : 0;
    }
    const double coverage = static_cast<double>(covered) / reps;
    const double bound = 0.95 - 3.0 * std::sqrt(0.95 * 0.05 / reps);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "coverage %.4f >= %.4f (threshold %.2f)", coverage, bound,
                  threshold);
    report(3, "univariate interval coverage", coverage >= bound, buf, timer.seconds());
}

// ---------------------------------------------------------------------------
// 4. coverage / delay / length at p=100, s=2, vartheta=2, beta=4

void criterion_coverage_table() {
    Timer timer;
    const int p = 100;
    const double gamma = 30000.0;
    const double alpha = 0.05;
    const ScaleGrid grid(p, 4.0);
    const PracticalScales practical = practical_preset(p, alpha, 0.5);

    const MonteCarloThresholds mc =
        monte_carlo_thresholds(grid, static_cast<std::int64_t>(gamma), practical.a, Variant::Ocd,
                               100, 0xACC5, 0.5, 0.5, worker_threads());

    ChangeScenario scenario{p, 1000, SignalShape::SphereUniform, 2, 2.0, {}};
    const DetectorConfig det_cfg{grid, practical.a, mc.t_diag, mc.t_off, Variant::Ocd};
    const InferenceConfig inf_cfg{practical.d1, practical.d2, 0, alpha};
    const ExperimentReport rep = run_coverage_experiment(scenario, det_cfg, inf_cfg, 500, 0xACC6,
                                                         worker_threads());

    const bool cov_ok = rep.coverage >= 0.962 - 3.0 * 0.009 && rep.coverage <= 1.0;
    const bool delay_ok = rep.mean_delay >= 8.8 && rep.mean_delay <= 10.8;
    const bool len_ok = rep.mean_ci_length >= 17.1 && rep.mean_ci_length <= 23.1;
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "coverage %.3f in [0.935,1], delay %.2f in [8.8,10.8], length %.2f in "
                  "[17.1,23.1]; thresholds %.2f/%.2f, censored %d",
                  rep.coverage, rep.mean_delay, rep.mean_ci_length, mc.t_diag, mc.t_off,
                  rep.censored);
    report(4, "coverage/delay/length reproduction", cov_ok && delay_ok && len_ok, buf,
           timer.seconds());
}

// ---------------------------------------------------------------------------
// 5. support recovery at p=100, s=5, vartheta=beta=2, uniform shape

void criterion_support_table() {
    Timer timer;
    const int p = 100;
    const double gamma = 30000.0;
    const double alpha = 0.05;
    const ScaleGrid grid(p, 2.0);
    const double a = std::sqrt(2.0 * std::log(static_cast<double>(p)));
    const double d1 = std::sqrt(2.0 * std::log(p / alpha));
    const std::int64_t ell =
        static_cast<std::int64_t>(std::ceil(a * a * 5.0 / 4.0 * std::log2(2.0 * p)));

    const MonteCarloThresholds mc =
        monte_carlo_thresholds(grid, static_cast<std::int64_t>(gamma), a, Variant::OcdPrime, 60,
                               0xACC7, 0.5, 0.5, worker_threads());

    ChangeScenario scenario{p, 1000, SignalShape::Uniform, 5, 2.0, {}};
    const DetectorConfig det_cfg{grid, a, mc.t_diag, mc.t_off, Variant::OcdPrime};
    const InferenceConfig inf_cfg{d1, 4.0 * d1 * d1, ell, alpha};
    const std::vector<double> d1s{d1};
    const auto rows =
        run_support_experiment(scenario, det_cfg, inf_cfg, d1s, 200, 0xACC8, worker_threads());

    const SupportRocRow& row = rows.front();
    const bool fp_ok = row.fp_free >= 0.97;
    const bool fn_ok = row.fn_free >= 0.93;
    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "P(no false positives) %.3f >= 0.97, P(covers support) %.3f >= 0.93 "
                  "(ell=%lld, declared %d/200)",
                  row.fp_free, row.fn_free, static_cast<long long>(ell), row.declared);
    report(5, "support recovery reproduction", fp_ok && fn_ok, buf, timer.seconds());
}

// ---------------------------------------------------------------------------
// 6. patience: calibrated alarm budget and the theoretical false-alarm bound

void criterion_patience() {
    Timer timer;
    const int p = 20;
    const std::int64_t gamma = 2000;
    const ScaleGrid grid(p, 1.0);
    const double a = std::sqrt(2.0 * std::log(static_cast<double>(p)));

    const MonteCarloThresholds mc =
        monte_carlo_thresholds(grid, gamma, a, Variant::Ocd, 200, 0xACC9, 0.5, 0.5,
                               worker_threads());
    const DetectorConfig cal_cfg{grid, a, mc.t_diag, mc.t_off, Variant::Ocd};
    int alarms = 0;
    for (int r = 0; r < 200; ++r) {
        Rng rng = Rng::for_rep(0xACCA, static_cast<std::uint64_t>(r));
        Detector det(cal_cfg);
        std::vector<double> x(static_cast<std::size_t>(p));
        for (std::int64_t i = 0; i < gamma; ++i) {
            for (double& v : x) {
                v = rng.gaussian();
            }
            if (det.step(x).declared) {
                ++alarms;
                break;
            }
        }
    }
    const double fraction = alarms / 200.0;
    const bool band_ok = fraction >= 0.2 && fraction <= 0.8;

    // theoretical thresholds: P(N <= z) <= z / (4 gamma) for the prime variant
    const std::int64_t z = 1000;
    const TuningPreset theory = theoretical_preset(p, static_cast<double>(gamma), 1.0, 0.05);
    const DetectorConfig theory_cfg{grid, theory.a, theory.t_diag, theory.t_off,
                                    Variant::OcdPrime};
    int early = 0;
    for (int r = 0; r < 200; ++r) {
        Rng rng = Rng::for_rep(0xACCB, static_cast<std::uint64_t>(r));
        Detector det(theory_cfg);
        std::vector<double> x(static_cast<std::size_t>(p));
        for (std::int64_t i = 0; i < z; ++i) {
            for (double& v : x) {
                v = rng.gaussian();
            }
            if (det.step(x).declared) {
                ++early;
                break;
            }
        }
    }
    const double budget = static_cast<double>(z) / (4.0 * static_cast<double>(gamma));
    const double bound = budget + 3.0 * std::sqrt(budget * (1.0 - budget) / 200.0);
    const double early_fraction = early / 200.0;
    const bool lemma_ok = early_fraction <= bound;

    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "calibrated alarm fraction %.3f in [0.2,0.8] (budget %.3f); theoretical "
                  "early-alarm fraction %.3f <= %.3f",
                  fraction, mc.alarm_fraction, early_fraction, bound);
    report(6, "patience calibration and false-alarm bound", band_ok && lemma_ok, buf,
           timer.seconds());
}

// ---------------------------------------------------------------------------
// 7. exact sign-flip and permutation equivariance of the full pipeline

void criterion_equivariance() {
    Timer timer;
    bool ok = true;
    std::string detail = "100 seeded runs, sign-flip and permutation";
    for (int run = 0; run < 100 && ok; ++run) {
        const int p = 5;
        const Variant variant = run % 2 == 0 ? Variant::Ocd : Variant::OcdPrime;
        const DetectorConfig det_cfg{ScaleGrid(p, 1.0), 1.0, 8.0, 14.0, variant};
        const InferenceConfig inf_cfg{0.9, 3.24, variant == Variant::OcdPrime ? 6 : 0, 0.05};
        const std::int64_t z = 30;

        Rng draw = Rng::for_rep(0xACCC, static_cast<std::uint64_t>(run));
        std::vector<double> theta = sample_signal(p, 2, 2.5, SignalShape::SphereUniform, draw);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < 600; ++i) {
            std::vector<double> x(static_cast<std::size_t>(p));
            for (int j = 0; j < p; ++j) {
                x[static_cast<std::size_t>(j)] =
                    draw.gaussian() + (i >= z ? theta[static_cast<std::size_t>(j)] : 0.0);
            }
            rows.push_back(std::move(x));
        }
        const auto run_rows = [&](const std::vector<std::vector<double>>& data) {
            std::size_t pos = 0;
            const VectorSource source = [&data, &pos](std::span<double> out) {
                if (pos >= data.size()) {
                    return false;
                }
                std::copy(data[pos].begin(), data[pos].end(), out.begin());
                ++pos;
                return true;
            };
            return run_ocd_ci(source, det_cfg, inf_cfg, 500);
        };

        const RunOutcome base = run_rows(rows);
        if (!base.declared) {
            ok = false;
            detail = "run " + std::to_string(run) + " never declared";
            break;
        }

        // sign flip of one coordinate
        const int flip = run % p;
        auto flipped = rows;
        for (auto& row : flipped) {
            row[static_cast<std::size_t>(flip)] = -row[static_cast<std::size_t>(flip)];
        }
        const RunOutcome neg = run_rows(flipped);
        // when the anchor is the flipped coordinate, its scale swaps sign
        const int expect_scale = base.inference.anchor.coord == flip
                                     ? (base.inference.anchor.scale_index ^ 1)
                                     : base.inference.anchor.scale_index;
        bool same = neg.declared && neg.declaration.n == base.declaration.n &&
                    neg.inference.anchor.coord == base.inference.anchor.coord &&
                    neg.inference.anchor.scale_index == expect_scale &&
                    neg.inference.support == base.inference.support &&
                    neg.inference.ci_left == base.inference.ci_left &&
                    neg.inference.ci_right == base.inference.ci_right;
        if (same) {
            for (std::size_t i = 0; i < base.inference.support.size(); ++i) {
                const double expect = base.inference.support[i] == flip
                                          ? -base.inference.support_scale[i]
                                          : base.inference.support_scale[i];
                same = same && neg.inference.support_scale[i] == expect;
            }
        }
        if (!same) {
            ok = false;
            detail = "sign-flip mismatch at run " + std::to_string(run);
            break;
        }

        // coordinate rotation
        const int shift = 1 + run % (p - 1);
        const auto map = [&](int j) { return (j + shift) % p; };
        auto rotated = rows;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (int j = 0; j < p; ++j) {
                rotated[i][static_cast<std::size_t>(map(j))] = rows[i][static_cast<std::size_t>(j)];
            }
        }
        const RunOutcome perm = run_rows(rotated);
        same = perm.declared && perm.declaration.n == base.declaration.n &&
               perm.inference.anchor.coord == map(base.inference.anchor.coord) &&
               perm.inference.anchor.scale_index == base.inference.anchor.scale_index &&
               perm.inference.ci_left == base.inference.ci_left &&
               perm.inference.ci_right == base.inference.ci_right;
        if (same) {
            std::vector<int> mapped;
            for (const int j : base.inference.support) {
                mapped.push_back(map(j));
            }
            std::sort(mapped.begin(), mapped.end());
            same = perm.inference.support == mapped;
        }
        if (!same) {
            ok = false;
            detail = "permutation mismatch at run " + std::to_string(run);
            break;
        }
    }
    report(7, "equivariance of the full pipeline", ok, detail, timer.seconds());
}

// ---------------------------------------------------------------------------
// 8. thread-count determinism and constant memory

void criterion_determinism_memory() {
    Timer timer;
    ChangeScenario scenario{10, 50, SignalShape::SphereUniform, 2, 3.0, {}};
    const DetectorConfig det_cfg{ScaleGrid(10, 1.5), 1.4, 9.0, 16.0, Variant::Ocd};
    const InferenceConfig inf_cfg{1.1, 4.84, 0, 0.05};
    const ReportContext ctx{scenario, det_cfg, inf_cfg, 1000.0, 0xACCD};

    std::ostringstream one;
    std::ostringstream eight;
    write_coverage_report_csv(one, ctx,
                              run_coverage_experiment(scenario, det_cfg, inf_cfg, 40, 0xACCD, 1));
    write_coverage_report_csv(eight, ctx,
                              run_coverage_experiment(scenario, det_cfg, inf_cfg, 40, 0xACCD, 8));
    const bool reports_ok = one.str() == eight.str();

    bool memory_ok = true;
    for (const Variant variant : {Variant::Ocd, Variant::OcdPrime}) {
        DetectorConfig cfg{ScaleGrid(4, 1.0), 0.0, 1e18, 1e18, variant};
        Detector det(cfg);
        Rng rng(0xACCE);
        std::vector<double> x(4);
        std::size_t at_1k = 0;
        for (std::int64_t i = 1; i <= 1000000; ++i) {
            for (double& v : x) {
                v = rng.gaussian();
            }
            det.step(x);
            if (i == 1000) {
                at_1k = det.state_bytes();
            }
        }
        memory_ok = memory_ok && det.state_bytes() == at_1k;
    }

    report(8, "thread determinism and constant memory", reports_ok && memory_ok,
           std::string("reports byte-identical: ") + (reports_ok ? "yes" : "no") +
               ", footprint constant over 1e3 -> 1e6 steps: " + (memory_ok ? "yes" : "no"),
           timer.seconds());
}

}  // namespace

int main() {
    criterion_oracle_equivalence();
    criterion_tau_bounds();
    criterion_univariate_coverage();
    criterion_coverage_table();
    criterion_support_table();
    criterion_patience();
    criterion_equivariance();
    criterion_determinism_memory();
    if (failures == 0) {
        std::printf("all acceptance criteria passed\n");
    } else {
        std::printf("%d acceptance criteria failed\n", failures);
    }
    return failures == 0 ? 0 : 1;
}
