#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ocd/calibration.hpp"
#include "ocd/simulation.hpp"

using namespace ocd;

TEST_CASE("uniform signal with s = p") {
    Rng rng(1);
    const std::vector<double> theta =
        sample_signal(3, 3, std::sqrt(3.0), SignalShape::Uniform, rng);
    for (const double v : theta) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("harmonic signal normalization") {
    Rng rng(1);
    const std::vector<double> theta =
        sample_signal(2, 2, std::sqrt(5.0), SignalShape::Harmonic, rng);
    CHECK(theta[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(theta[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sphere draws have exactly s nonzeros and the right norm") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 10;
        const int s = 1 + trial % 7;
        const double vartheta = 0.5 + trial * 0.1;
        const std::vector<double> theta =
            sample_signal(p, s, vartheta, SignalShape::SphereUniform, rng);
        int nonzero = 0;
        double norm2 = 0.0;
        for (const double v : theta) {
            nonzero += v != 0.0 ? 1 : 0;
            norm2 += v * v;
        }
        CHECK(nonzero == s);
        CHECK(std::sqrt(norm2) == doctest::Approx(vartheta).epsilon(1e-12));
    }
}

TEST_CASE("signal argument validation") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_signal(3, 4, 1.0, SignalShape::Uniform, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_signal(3, 0, 1.0, SignalShape::Uniform, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_signal(3, 2, 0.0, SignalShape::Uniform, rng), std::invalid_argument);
}

TEST_CASE("rng gaussian moments") {
    // the stream generator adds theta to unit gaussians; check both moments
    Rng rng(123);
    const int n = 40000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.gaussian();
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("effective support basics") {
    SUBCASE("single spike") {
        const ScaleGrid grid(2, 1.0);
        const EffectiveSupportReport rep = effective_support(std::vector<double>{1.0, 0.0}, grid);
        CHECK(rep.s_eff == 1);
        CHECK(rep.effective == std::vector<int>{0});
    }
    SUBCASE("flat vector stabilizes at the smallest dyadic s whose set is large enough") {
        const ScaleGrid grid(8, 1.0);
        const std::vector<double> theta(8, 1.0 / std::sqrt(8.0));
        const EffectiveSupportReport rep = effective_support(theta, grid);
        // threshold passes all 8 coordinates from s = 2 on (s = 1 excludes them)
        CHECK(rep.s_eff == 2);
        CHECK(rep.effective.size() == 8);
    }
    SUBCASE("uniform five-signal case") {
        const ScaleGrid grid(100, 2.0);
        Rng rng(1);
        const std::vector<double> theta = sample_signal(100, 5, 2.0, SignalShape::Uniform, rng);
        const EffectiveSupportReport rep = effective_support(theta, grid);
        CHECK(rep.s_eff == 1);
        CHECK(rep.effective == std::vector<int>{0, 1, 2, 3, 4});
        CHECK(rep.beta_support == std::vector<int>{0, 1, 2, 3, 4});
    }
    SUBCASE("zero vector rejected") {
        const ScaleGrid grid(4, 1.0);
        CHECK_THROWS_AS(effective_support(std::vector<double>(4, 0.0), grid),
                        std::invalid_argument);
    }
}

TEST_CASE("effective support sits inside the beta support") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 2 + static_cast<int>(rng.uniform_index(30));
        const int s = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(p)));
        const double vartheta = 0.5 + 3.0 * rng.uniform();
        const double beta = vartheta * (0.3 + 0.7 * rng.uniform());  // beta <= vartheta
        const ScaleGrid grid(p, beta);
        Rng draw(Rng::mix(7, static_cast<std::uint64_t>(trial)));
        const std::vector<double> theta =
            sample_signal(p, s, vartheta, SignalShape::SphereUniform, draw);
        const EffectiveSupportReport rep = effective_support(theta, grid);
        for (const int j : rep.effective) {
            CHECK(std::binary_search(rep.beta_support.begin(), rep.beta_support.end(), j));
        }
    }
}

namespace {

ChangeScenario small_scenario() {
    ChangeScenario scenario;
    scenario.p = 6;
    scenario.z = 40;
    scenario.shape = SignalShape::SphereUniform;
    scenario.s = 2;
    scenario.vartheta = 3.0;
    return scenario;
}

DetectorConfig small_config() {
    return DetectorConfig{ScaleGrid(6, 1.5), std::sqrt(2.0 * std::log(6.0)), 9.0, 16.0,
                          Variant::Ocd};
}

}  // namespace

TEST_CASE("coverage experiment with one repetition equals the single run") {
    ChangeScenario scenario = small_scenario();
    scenario.shape = SignalShape::Uniform;  // deterministic theta: stream is pure rng
    const DetectorConfig det_cfg = small_config();
    const InferenceConfig inf_cfg{1.0, 4.0, 0, 0.05};
    const ExperimentReport rep =
        run_coverage_experiment(scenario, det_cfg, inf_cfg, 1, 31, 1);
    REQUIRE(rep.reps == 1);
    REQUIRE(rep.declared == 1);

    Rng rng = Rng::for_rep(31, 0);
    std::int64_t drawn = 0;
    const std::vector<double> theta =
        [&] {
            Rng tmp(0);
            return sample_signal(scenario.p, scenario.s, scenario.vartheta, scenario.shape, tmp);
        }();
    const VectorSource source = [&](std::span<double> out) {
        ++drawn;
        for (int j = 0; j < scenario.p; ++j) {
            out[static_cast<std::size_t>(j)] =
                rng.gaussian() + (drawn > scenario.z ? theta[static_cast<std::size_t>(j)] : 0.0);
        }
        return true;
    };
    const RunOutcome run = run_ocd_ci(source, det_cfg, inf_cfg, 100000);
    REQUIRE(run.declared);
    const bool covered =
        run.inference.ci_left <= scenario.z && scenario.z <= run.inference.ci_right;
    CHECK(rep.coverage == (covered ? 1.0 : 0.0));
    if (run.declaration.n > scenario.z) {
        CHECK(rep.mean_delay == static_cast<double>(run.declaration.n - scenario.z));
        CHECK(rep.mean_ci_length ==
              static_cast<double>(run.inference.ci_right - run.inference.ci_left));
    }
}

TEST_CASE("z = 0 never records a false alarm") {
    ChangeScenario scenario = small_scenario();
    scenario.z = 0;
    const ExperimentReport rep = run_coverage_experiment(scenario, small_config(),
                                                         InferenceConfig{1.0, 4.0, 0, 0.05},
                                                         30, 5, 1);
    CHECK(rep.false_alarm_rate == 0.0);
    CHECK(rep.declared + rep.censored == 30);
}

TEST_CASE("reports are identical across thread counts") {
    const ChangeScenario scenario = small_scenario();
    const DetectorConfig det_cfg = small_config();
    const InferenceConfig inf_cfg{1.0, 4.0, 0, 0.05};
    const ReportContext ctx{scenario, det_cfg, inf_cfg, 1000.0, 17};
    std::ostringstream one;
    std::ostringstream four;
    write_coverage_report_csv(one, ctx,
                              run_coverage_experiment(scenario, det_cfg, inf_cfg, 24, 17, 1));
    write_coverage_report_csv(four, ctx,
                              run_coverage_experiment(scenario, det_cfg, inf_cfg, 24, 17, 4));
    CHECK(one.str() == four.str());
    CHECK(one.str().find("coverage") != std::string::npos);
}

TEST_CASE("null stream scenario reports false alarms without crashing") {
    ChangeScenario scenario;
    scenario.p = 4;
    scenario.z = 1000000;  // never changes inside the horizon
    scenario.shape = SignalShape::Explicit;
    scenario.theta.assign(4, 0.0);
    const DetectorConfig det_cfg{ScaleGrid(4, 1.0), 1.0, 2.5, 4.0, Variant::Ocd};
    const ExperimentReport rep = run_coverage_experiment(scenario, det_cfg,
                                                         InferenceConfig{1.0, 4.0, 0, 0.05},
                                                         40, 3, 1, 500);
    CHECK(rep.declared + rep.censored == 40);
    // low thresholds: essentially every run alarms inside the horizon
    CHECK(rep.false_alarm_rate > 0.5);
    CHECK(std::isnan(rep.coverage) == (rep.declared == 0));
}

TEST_CASE("support experiment: huge d1 empties the estimate") {
    ChangeScenario scenario = small_scenario();
    scenario.shape = SignalShape::Uniform;
    scenario.s = 3;
    const DetectorConfig det_cfg = small_config();
    const InferenceConfig inf_cfg{1.0, 4.0, 0, 0.05};
    const std::vector<double> d1s{0.5, 1e9};
    const auto rows = run_support_experiment(scenario, det_cfg, inf_cfg, d1s, 30, 11, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].fp_free == 1.0);  // empty set is always contained
    CHECK(rows[0].fp_free <= 1.0);
    CHECK(rows[1].fn_free <= rows[0].fn_free + 1e-12);  // larger d1 keeps fewer signals
    // anchor alone is always selected
    double max_freq = 0.0;
    for (const double f : rows[1].selection_freq) {
        max_freq = std::max(max_freq, f);
    }
    CHECK(max_freq > 0.0);
}

TEST_CASE("huge signal with d1 = 0 recovers everything") {
    // every coordinate carries signal and the margin is off, so the
    // estimated support plus the anchor covers the effective support
    ChangeScenario scenario;
    scenario.p = 8;
    scenario.z = 30;
    scenario.shape = SignalShape::Uniform;
    scenario.s = 8;
    scenario.vartheta = 20.0;
    const ScaleGrid grid(8, 20.0);
    // calibrate with enough patience that false alarms before z are rare
    const MonteCarloThresholds mc =
        monte_carlo_thresholds(grid, 2000, std::sqrt(2.0 * std::log(8.0)), Variant::OcdPrime, 60,
                               404);
    const DetectorConfig det_cfg{grid, std::sqrt(2.0 * std::log(8.0)), mc.t_diag, mc.t_off,
                                 Variant::OcdPrime};
    const InferenceConfig inf_cfg{0.0, 4.0, 1, 0.05};
    const std::vector<double> d1s{0.0};
    const auto rows = run_support_experiment(scenario, det_cfg, inf_cfg, d1s, 200, 2, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].declared >= 195);
    CHECK(rows[0].fn_free >= 0.95);
}

TEST_CASE("csv writers") {
    const ChangeScenario scenario = small_scenario();
    const DetectorConfig det_cfg = small_config();
    const InferenceConfig inf_cfg{1.0, 4.0, 0, 0.05};
    const ReportContext ctx{scenario, det_cfg, inf_cfg, 123.0, 9};

    std::vector<SupportRocRow> rows(2);
    rows[0].d1 = 0.5;
    rows[0].reps = 10;
    rows[0].declared = 10;
    rows[0].fp_free = 0.9;
    rows[0].fn_free = 0.8;
    rows[0].selection_freq = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    rows[1] = rows[0];
    rows[1].d1 = 1.5;

    std::ostringstream table;
    write_support_report_csv(table, ctx, rows);
    const std::string text = table.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 rows
    CHECK(text.find("fn_free") != std::string::npos);

    std::ostringstream freq;
    write_selection_freq_csv(freq, rows);
    const std::string freq_text = freq.str();
    CHECK(std::count(freq_text.begin(), freq_text.end(), '\n') == 1 + 2 * 6);
}
