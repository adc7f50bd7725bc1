#include "ocd/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ocd/calibration.hpp"
#include "ocd/csv.hpp"
#include "ocd/detector.hpp"
#include "ocd/format.hpp"
#include "ocd/inference.hpp"
#include "ocd/monitor.hpp"
#include "ocd/preprocess.hpp"
#include "ocd/rng.hpp"
#include "ocd/simulation.hpp"

namespace ocd {

namespace {

int default_threads() {
    if (const char* env = std::getenv("OCDCI_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) {
            return v;
        }
    }
    return 1;
}

Variant variant_from_name(const std::string& name) {
    if (name == "ocd") {
        return Variant::Ocd;
    }
    if (name == "ocd-prime") {
        return Variant::OcdPrime;
    }
    throw CLI::ValidationError("--variant", "must be 'ocd' or 'ocd-prime'");
}

// Tuning flags shared by detect and the simulate subcommands.  Explicit
// flags override the preset file; the preset file overrides computed
// defaults (practical a/d1/d2, theoretical thresholds).
struct TuningFlags {
    double a = 0.0;
    double c = 0.5;
    double d1 = 0.0;
    double d2 = 0.0;
    double t_diag = 0.0;
    double t_off = 0.0;
    std::int64_t ell = 0;
    std::string variant_name = "ocd";
    std::string preset_file;

    CLI::Option* a_opt = nullptr;
    CLI::Option* c_opt = nullptr;
    CLI::Option* d1_opt = nullptr;
    CLI::Option* d2_opt = nullptr;
    CLI::Option* t_diag_opt = nullptr;
    CLI::Option* t_off_opt = nullptr;
    CLI::Option* ell_opt = nullptr;

    void add_to(CLI::App* sub, bool include_d1 = true) {
        a_opt = sub->add_option("--a", a, "hard-threshold level in the Q statistics");
        c_opt = sub->add_option("--c", c, "factor c in d1 = c*sqrt(ln(p/alpha)) (default 0.5)");
        if (include_d1) {
            d1_opt = sub->add_option("--d1", d1, "support threshold d1 (overrides --c)");
        }
        d2_opt = sub->add_option("--d2", d2, "interval slack d2 (default 4*d1^2)");
        t_diag_opt = sub->add_option("--t-diag", t_diag, "diagonal declaration threshold");
        t_off_opt = sub->add_option("--t-off", t_off, "off-diagonal declaration threshold");
        ell_opt = sub->add_option("--ell", ell, "extra post-declaration observations (ocd-prime only)");
        sub->add_option("--variant", variant_name, "detector variant")
            ->check(CLI::IsMember({"ocd", "ocd-prime"}));
        sub->add_option("--preset-file", preset_file, "tuning preset file (JSON)")
            ->check(CLI::ExistingFile);
    }
};

struct ResolvedTuning {
    double a = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double t_diag = 0.0;
    double t_off = 0.0;
    std::int64_t ell = 0;
    Variant variant = Variant::Ocd;
    bool thresholds_given = false;  // explicit flag or preset supplied them
};

ResolvedTuning resolve_tuning(const TuningFlags& f, int p, double gamma, double beta,
                              double alpha) {
    ResolvedTuning r;
    r.variant = variant_from_name(f.variant_name);

    std::optional<TuningPreset> preset;
    if (!f.preset_file.empty()) {
        preset = read_preset_file(f.preset_file);
    }
    const double c = f.c_opt->count() > 0 ? f.c : 0.5;
    const PracticalScales practical = practical_preset(p, alpha, c);

    r.a = f.a_opt->count() > 0 ? f.a : (preset ? preset->a : practical.a);

    if (f.d1_opt != nullptr && f.d1_opt->count() > 0) {
        r.d1 = f.d1;
    } else if (f.c_opt->count() > 0 || !preset) {
        r.d1 = practical.d1;
    } else {
        r.d1 = preset->d1;
    }
    const bool d1_given = f.d1_opt != nullptr && f.d1_opt->count() > 0;
    if (f.d2_opt->count() > 0) {
        r.d2 = f.d2;
    } else if (d1_given || f.c_opt->count() > 0 || !preset) {
        r.d2 = 4.0 * r.d1 * r.d1;
    } else {
        r.d2 = preset->d2;
    }

    const bool t_diag_given = f.t_diag_opt->count() > 0;
    const bool t_off_given = f.t_off_opt->count() > 0;
    if (t_diag_given || t_off_given || preset) {
        r.thresholds_given = true;
        const TuningPreset fallback =
            preset ? *preset : theoretical_preset(p, gamma, beta, alpha);
        r.t_diag = t_diag_given ? f.t_diag : fallback.t_diag;
        r.t_off = t_off_given ? f.t_off : fallback.t_off;
    } else {
        const TuningPreset theory = theoretical_preset(p, gamma, beta, alpha);
        r.t_diag = theory.t_diag;
        r.t_off = theory.t_off;
    }

    if (f.ell_opt->count() > 0) {
        if (r.variant == Variant::Ocd) {
            throw CLI::ValidationError("--ell", "extra sampling requires --variant ocd-prime");
        }
        r.ell = f.ell;
    } else if (preset && r.variant == Variant::OcdPrime) {
        r.ell = preset->ell;
    } else {
        r.ell = 0;
    }
    return r;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty()) {
        return std::cout;
    }
    file.open(path);
    if (!file) {
        throw std::runtime_error("cannot write output file: " + path);
    }
    return file;
}

std::string preset_json(const TuningPreset& preset) {
    nlohmann::json j;
    j["a"] = preset.a;
    j["t_diag"] = preset.t_diag;
    j["t_off"] = preset.t_off;
    j["d1"] = preset.d1;
    j["d2"] = preset.d2;
    j["ell"] = preset.ell;
    j["provenance"] = provenance_name(preset.provenance);
    return j.dump(2);
}

// ---------------------------------------------------------------- preset --

struct PresetArgs {
    int p = 2;
    double gamma = 10000.0;
    double beta = 1.0;
    double alpha = 0.05;
    double c1 = 2.8284271247461903;
    double c2 = 1.0;
    int s_hint = 0;
    double c3 = 1.0;
    std::string output;
    CLI::Option* s_hint_opt = nullptr;
};

int run_preset(const PresetArgs& args) {
    std::optional<int> s_hint;
    if (args.s_hint_opt->count() > 0) {
        s_hint = args.s_hint;
    }
    const TuningPreset preset =
        theoretical_preset(args.p, args.gamma, args.beta, args.alpha, args.c1, args.c2, s_hint,
                           args.c3);
    const std::string text = preset_json(preset);
    if (!args.output.empty()) {
        std::ofstream out(args.output);
        if (!out) {
            throw std::runtime_error("cannot write preset file: " + args.output);
        }
        out << text << "\n";
    }
    std::cout << text << "\n";
    return 0;
}

// ------------------------------------------------------------- calibrate --

struct CalibrateArgs {
    int p = 2;
    double beta = 1.0;
    double gamma = 10000.0;
    double alpha = 0.05;
    double c = 0.5;
    std::string variant_name = "ocd";
    int reps = 100;
    std::uint64_t seed = 1;
    int threads = default_threads();
    double q_diag = 0.5;
    double q_off = 0.5;
    std::string output;
    CLI::Option* a_opt = nullptr;
    double a = 0.0;
};

int run_calibrate(const CalibrateArgs& args) {
    const ScaleGrid grid(args.p, args.beta);
    const PracticalScales practical = practical_preset(args.p, args.alpha, args.c);
    const double a = args.a_opt->count() > 0 ? args.a : practical.a;
    const Variant variant = variant_from_name(args.variant_name);
    const MonteCarloThresholds mc =
        monte_carlo_thresholds(grid, static_cast<std::int64_t>(args.gamma), a, variant, args.reps,
                               args.seed, args.q_diag, args.q_off, args.threads);

    nlohmann::json j;
    j["a"] = a;
    j["t_diag"] = mc.t_diag;
    j["t_off"] = mc.t_off;
    j["d1"] = practical.d1;
    j["d2"] = practical.d2;
    j["ell"] = 0;
    j["provenance"] = provenance_name(Provenance::MonteCarlo);
    j["context"] = {{"p", args.p},
                    {"beta", args.beta},
                    {"gamma", args.gamma},
                    {"alpha", args.alpha},
                    {"variant", args.variant_name},
                    {"reps", args.reps},
                    {"seed", args.seed},
                    {"q_diag", args.q_diag},
                    {"q_off", args.q_off},
                    {"alarm_fraction", mc.alarm_fraction}};
    const std::string text = j.dump(2);
    if (!args.output.empty()) {
        std::ofstream out(args.output);
        if (!out) {
            throw std::runtime_error("cannot write preset file: " + args.output);
        }
        out << text << "\n";
    }
    std::cout << text << "\n";
    return 0;
}

// ---------------------------------------------------------------- detect --

struct DetectArgs {
    std::string input = "-";
    std::int64_t train_rows = 0;
    bool sqrt_transform = false;
    double clip = 0.0;
    CLI::Option* clip_opt = nullptr;
    std::int64_t cooldown = 0;
    int p = 0;
    CLI::Option* p_opt = nullptr;
    double beta = 1.0;
    double alpha = 0.05;
    double gamma = 10000.0;
    std::string output;
    TuningFlags tuning;
};

int run_detect(const DetectArgs& args) {
    CsvTable table;
    if (args.input == "-") {
        table = read_csv(std::cin);
    } else {
        table = read_csv_file(args.input);
    }

    PreprocessSpec spec;
    spec.train_rows = args.train_rows;
    spec.sqrt_transform = args.sqrt_transform;
    if (args.clip_opt->count() > 0) {
        spec.clip = args.clip;
    }
    const StandardizedSeries series = preprocess(table, spec);
    for (const std::string& warning : series.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    const int p = static_cast<int>(series.columns.size());
    if (args.p_opt->count() > 0 && args.p != p) {
        throw std::runtime_error("--p is " + std::to_string(args.p) + " but " +
                                 std::to_string(p) + " series remain after preprocessing");
    }

    const ResolvedTuning tuning = resolve_tuning(args.tuning, p, args.gamma, args.beta, args.alpha);
    MonitorConfig cfg{DetectorConfig{ScaleGrid(p, args.beta), tuning.a, tuning.t_diag,
                                     tuning.t_off, tuning.variant},
                      InferenceConfig{tuning.d1, tuning.d2, tuning.ell, args.alpha},
                      args.cooldown};

    const std::vector<MonitorRecord> records = monitor(series.rows, cfg);
    std::ofstream file;
    std::ostream& out = open_output(file, args.output);
    for (const MonitorRecord& rec : records) {
        out << monitor_record_json(rec, series.columns, cfg) << "\n";
    }
    std::cerr << records.size() << " declaration(s) over " << series.rows.size() << " rows\n";
    return 0;
}

// ------------------------------------------------------------- simulate --

struct SimulateArgs {
    int p = 100;
    int s = 2;
    double vartheta = 1.0;
    std::string shape_name = "sphere";
    std::int64_t z = 0;
    double beta = 1.0;
    double gamma = 10000.0;
    double alpha = 0.05;
    int reps = 200;
    std::uint64_t seed = 1;
    int threads = default_threads();
    int calibrate_reps = 100;
    std::int64_t horizon = 0;
    std::string output;
    TuningFlags tuning;

    void add_common(CLI::App* sub, bool include_d1 = true) {
        sub->add_option("--p", p, "dimension")->check(CLI::Range(2, 1 << 20));
        sub->add_option("--s", s, "signal sparsity");
        sub->add_option("--vartheta", vartheta, "l2-norm of the mean change");
        sub->add_option("--shape", shape_name, "signal shape")
            ->check(CLI::IsMember({"sphere", "uniform", "inv-sqrt", "harmonic"}));
        sub->add_option("--z", z, "changepoint time");
        sub->add_option("--beta", beta, "lower bound on the change norm");
        sub->add_option("--gamma", gamma, "patience (average run length target)");
        sub->add_option("--alpha", alpha, "nominal miscoverage");
        sub->add_option("--reps", reps, "Monte Carlo repetitions");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--threads", threads, "worker threads (default $OCDCI_THREADS or 1)");
        sub->add_option("--calibrate-reps", calibrate_reps,
                        "repetitions for automatic threshold calibration");
        sub->add_option("--horizon", horizon, "detection cap (0 = derive from the scenario)");
        sub->add_option("--output", output, "output CSV file (default stdout)");
        tuning.add_to(sub, include_d1);
    }

    ReportContext make_context(const ResolvedTuning& tuning_values) const {
        ReportContext ctx{ChangeScenario{p, z, shape_from_name(shape_name), s, vartheta, {}},
                          DetectorConfig{ScaleGrid(p, beta), tuning_values.a,
                                         tuning_values.t_diag, tuning_values.t_off,
                                         tuning_values.variant},
                          InferenceConfig{tuning_values.d1, tuning_values.d2, tuning_values.ell,
                                          alpha},
                          gamma, seed};
        return ctx;
    }

    ResolvedTuning resolve() const {
        ResolvedTuning tuning_values = resolve_tuning(tuning, p, gamma, beta, alpha);
        if (!tuning_values.thresholds_given) {
            std::cerr << "calibrating thresholds: p=" << p << " gamma=" << gamma
                      << " reps=" << calibrate_reps << "\n";
            const MonteCarloThresholds mc = monte_carlo_thresholds(
                ScaleGrid(p, beta), static_cast<std::int64_t>(gamma), tuning_values.a,
                tuning_values.variant, calibrate_reps, Rng::mix(seed, 0x5EEDu), 0.5, 0.5,
                threads);
            tuning_values.t_diag = mc.t_diag;
            tuning_values.t_off = mc.t_off;
            std::cerr << "thresholds: t_diag=" << format_number(mc.t_diag)
                      << " t_off=" << format_number(mc.t_off) << "\n";
        }
        return tuning_values;
    }
};

int run_simulate_coverage(const SimulateArgs& args) {
    const ResolvedTuning tuning = args.resolve();
    const ReportContext ctx = args.make_context(tuning);
    const ExperimentReport report = run_coverage_experiment(
        ctx.scenario, ctx.det_cfg, ctx.inf_cfg, args.reps, args.seed, args.threads, args.horizon);
    std::ofstream file;
    std::ostream& out = open_output(file, args.output);
    write_coverage_report_csv(out, ctx, report);
    return 0;
}

struct SimulateSupportArgs : SimulateArgs {
    std::vector<double> d1_values;
    std::string freq_output;
};

int run_simulate_support(const SimulateSupportArgs& args) {
    const ResolvedTuning tuning = args.resolve();
    const ReportContext ctx = args.make_context(tuning);
    std::vector<double> d1_values = args.d1_values;
    if (d1_values.empty()) {
        d1_values.push_back(tuning.d1);
    }
    const std::vector<SupportRocRow> rows = run_support_experiment(
        ctx.scenario, ctx.det_cfg, ctx.inf_cfg, d1_values, args.reps, args.seed, args.threads,
        args.horizon);
    std::ofstream file;
    std::ostream& out = open_output(file, args.output);
    write_support_report_csv(out, ctx, rows);
    if (!args.freq_output.empty()) {
        std::ofstream freq(args.freq_output);
        if (!freq) {
            throw std::runtime_error("cannot write output file: " + args.freq_output);
        }
        write_selection_freq_csv(freq, rows);
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Online changepoint detection with confidence intervals and support recovery"};
    app.require_subcommand(1);

    PresetArgs preset_args;
    CLI::App* preset_cmd = app.add_subcommand("preset", "compute theoretical tuning parameters");
    preset_cmd->add_option("--p", preset_args.p, "dimension")->required()->check(CLI::Range(2, 1 << 20));
    preset_cmd->add_option("--gamma", preset_args.gamma, "patience");
    preset_cmd->add_option("--beta", preset_args.beta, "lower bound on the change norm");
    preset_cmd->add_option("--alpha", preset_args.alpha, "nominal miscoverage");
    preset_cmd->add_option("--c1", preset_args.c1, "slope of the a formula");
    preset_cmd->add_option("--c2", preset_args.c2, "d1 = c2 * a");
    preset_args.s_hint_opt =
        preset_cmd->add_option("--s-hint", preset_args.s_hint, "sparsity hint for the ell formula");
    preset_cmd->add_option("--c3", preset_args.c3, "slope of the ell formula");
    preset_cmd->add_option("--output", preset_args.output, "write the preset to this file");

    CalibrateArgs cal_args;
    CLI::App* cal_cmd = app.add_subcommand("calibrate", "Monte Carlo threshold calibration");
    cal_cmd->add_option("--p", cal_args.p, "dimension")->required()->check(CLI::Range(2, 1 << 20));
    cal_cmd->add_option("--beta", cal_args.beta, "lower bound on the change norm");
    cal_cmd->add_option("--gamma", cal_args.gamma, "patience")->required();
    cal_cmd->add_option("--alpha", cal_args.alpha, "nominal miscoverage");
    cal_cmd->add_option("--c", cal_args.c, "factor c for the emitted d1");
    cal_args.a_opt = cal_cmd->add_option("--a", cal_args.a, "hard-threshold level");
    cal_cmd->add_option("--variant", cal_args.variant_name, "detector variant")
        ->check(CLI::IsMember({"ocd", "ocd-prime"}));
    cal_cmd->add_option("--reps", cal_args.reps, "calibration repetitions");
    cal_cmd->add_option("--seed", cal_args.seed, "random seed");
    cal_cmd->add_option("--threads", cal_args.threads, "worker threads");
    cal_cmd->add_option("--q-diag", cal_args.q_diag, "alarm budget for the diagonal statistic");
    cal_cmd->add_option("--q-off", cal_args.q_off, "alarm budget for the off-diagonal statistic");
    cal_cmd->add_option("--output", cal_args.output, "write the preset to this file");

    DetectArgs det_args;
    CLI::App* det_cmd = app.add_subcommand("detect", "monitor a CSV stream");
    det_cmd->add_option("input", det_args.input, "input CSV ('-' for stdin)");
    det_cmd->add_option("--train-rows", det_args.train_rows, "training window length")->required();
    det_cmd->add_flag("--sqrt", det_args.sqrt_transform, "square-root transform before standardizing");
    det_args.clip_opt = det_cmd->add_option("--clip", det_args.clip, "symmetric clip level");
    det_cmd->add_option("--cooldown", det_args.cooldown, "rows to skip after each declaration");
    det_args.p_opt = det_cmd->add_option("--p", det_args.p, "expected number of series");
    det_cmd->add_option("--beta", det_args.beta, "lower bound on the change norm");
    det_cmd->add_option("--alpha", det_args.alpha, "nominal miscoverage");
    det_cmd->add_option("--gamma", det_args.gamma, "patience");
    det_cmd->add_option("--output", det_args.output, "output records file (default stdout)");
    det_args.tuning.add_to(det_cmd);

    SimulateArgs cov_args;
    CLI::App* cov_cmd = app.add_subcommand("simulate-coverage",
                                           "coverage / length / delay experiment");
    cov_args.add_common(cov_cmd);

    SimulateSupportArgs sup_args;
    CLI::App* sup_cmd = app.add_subcommand("simulate-support", "support recovery experiment");
    sup_args.add_common(sup_cmd, /*include_d1=*/false);
    sup_cmd->add_option("--d1", sup_args.d1_values, "d1 values to sweep")->take_all();
    sup_cmd->add_option("--freq-output", sup_args.freq_output,
                        "per-coordinate selection frequency CSV");

    try {
        app.parse(argc, argv);
        if (preset_cmd->parsed()) {
            return run_preset(preset_args);
        }
        if (cal_cmd->parsed()) {
            return run_calibrate(cal_args);
        }
        if (det_cmd->parsed()) {
            return run_detect(det_args);
        }
        if (cov_cmd->parsed()) {
            return run_simulate_coverage(cov_args);
        }
        if (sup_cmd->parsed()) {
            return run_simulate_support(sup_args);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ocd
