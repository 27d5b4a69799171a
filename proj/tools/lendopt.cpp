// Command-line front end: calibrate intensities from pool history, solve the
// linear-intensity control problem, train rate models on the relaxed
// simulator, evaluate PnL statistics and compare rate surfaces.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lendopt/calibrate.hpp"
#include "lendopt/csv.hpp"
#include "lendopt/hjb.hpp"
#include "lendopt/intensity.hpp"
#include "lendopt/optimize.hpp"
#include "lendopt/report.hpp"
#include "lendopt/sim.hpp"

namespace {

using namespace lendopt;

enum ExitCode {
    kOk = 0,
    kThresholdExceeded = 1,
    kBadInput = 2,
    kCalibrationFailed = 3,
    kDiverged = 4,
    kTrainingFailed = 5,
};

using Meta = std::vector<std::pair<std::string, std::string>>;

struct Options {
    // risk / grid
    double phi = 7.0, eta = 1500.0, r_bar = 0.0, u_star = 0.9;
    double horizon = 100.0, delta = 0.001, r_min = 0.0, r_max = 0.25;
    // simulation
    int n_steps = 100, jump_trials = 10;
    double epsilon = 0.25;
    std::uint64_t seed = 1;
    long n_paths = 100000;
    int threads = 0;
    // training
    double phase1_lr = 1e-3, phase2_lr = 1e-4;
    long phase1_batch = 2500, phase2_batch = 25000, validation_size = 250000;
    int phase1_iters = 1000, phase2_iters = 1000;
    int check_every = 10, min_iters = 100, epochs = 10;
    double stop_threshold = 1e-7;

    RiskParams risk() const {
        RiskParams p;
        p.phi = phi;
        p.eta = eta;
        p.r_bar = r_bar;
        p.u_star = u_star;
        p.horizon = horizon;
        p.delta = delta;
        p.r_min = r_min;
        p.r_max = r_max;
        return p;
    }

    Meta echo(const std::string& command) const {
        Meta m{{"command", command}};
        const auto add = [&](const char* k, double v) { m.emplace_back(k, csv::format_double(v)); };
        add("phi", phi);
        add("eta", eta);
        add("r_bar", r_bar);
        add("u_star", u_star);
        add("horizon", horizon);
        add("delta", delta);
        add("r_min", r_min);
        add("r_max", r_max);
        m.emplace_back("n_steps", std::to_string(n_steps));
        m.emplace_back("jump_trials", std::to_string(jump_trials));
        add("epsilon", epsilon);
        m.emplace_back("seed", std::to_string(seed));
        return m;
    }
};

void register_shared(CLI::App* cmd, Options& o) {
    cmd->add_option("--phi", o.phi, "volatility risk aversion");
    cmd->add_option("--eta", o.eta, "liquidity risk aversion");
    cmd->add_option("--r-bar", o.r_bar, "reference rate");
    cmd->add_option("--u-star", o.u_star, "target utilization");
    cmd->add_option("--horizon", o.horizon, "horizon T in blocks");
    cmd->add_option("--delta", o.delta, "utilization jump size");
    cmd->add_option("--r-min", o.r_min, "lower rate bound");
    cmd->add_option("--r-max", o.r_max, "upper rate bound");
    cmd->add_option("--n-steps", o.n_steps, "time steps N");
    cmd->add_option("--jump-trials", o.jump_trials, "Bernoulli trials per step (J)");
    cmd->add_option("--epsilon", o.epsilon, "hard-sigmoid half-width");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

/// JSON config file: any key matching a long flag (without --, dashes or
/// underscores both accepted) supplies a default; explicit flags win.
void overlay_config(CLI::App& app, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InputError("cannot parse config file '" + path + "': " + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string name = it.key();
        for (auto& c : name)
            if (c == '_') c = '-';
        for (CLI::App* sub : app.get_subcommands({})) {
            if (CLI::Option* opt = sub->get_option_no_throw("--" + name)) {
                if (opt->count() == 0) {
                    const std::string v =
                        it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
                    opt->add_result(v);
                }
            }
        }
    }
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

// ---------------------------------------------------------------------------

int cmd_calibrate(const Options& o, const std::string& history_path,
                  const std::string& out_intensity, const std::string& out_report, int bins) {
    const auto history = calibrate::read_history_csv(history_path);
    calibrate::FitReport report;
    const auto curve =
        calibrate::calibrate_intensities(history, o.delta, bins, o.r_min, o.r_max, &report);
    if (report.degenerate_bins)
        std::cerr << "warning: all rates identical; calibrated a single degenerate bin\n";
    if (report.gap_count > 0)
        std::cerr << "note: " << report.gap_count
                  << " multi-block gaps treated as single transitions\n";
    Meta meta = o.echo("calibrate");
    meta.emplace_back("history", history_path);
    meta.emplace_back("bins", std::to_string(bins));
    intensity::write_csv(curve, out_intensity, meta);
    if (!out_report.empty()) calibrate::write_fit_report_csv(report, out_report, meta);
    return kOk;
}

int cmd_solve(const Options& o, const intensity::LinearIntensity& curve,
              const std::string& out_rate, const std::string& out_value) {
    const RiskParams params = o.risk();
    const auto system = hjb::build_system(curve, params);
    const auto times = TimeGrid::make(params.horizon, o.n_steps);
    const auto h = hjb::solve_riccati(system, times);
    const auto rates = hjb::optimal_rate_surface(h, curve, params);
    Meta meta = o.echo("solve");
    meta.emplace_back("a0_plus", csv::format_double(curve.a0_plus));
    meta.emplace_back("a1_plus", csv::format_double(curve.a1_plus));
    meta.emplace_back("a0_minus", csv::format_double(curve.a0_minus));
    meta.emplace_back("a1_minus", csv::format_double(curve.a1_minus));
    hjb::write_surface_csv(rates, out_rate, meta);
    if (!out_value.empty()) hjb::write_surface_csv(h, out_value, meta);
    return kOk;
}

opt::TrainConfig train_config(const Options& o, const sim::U0Spec& u0) {
    opt::TrainConfig tc;
    tc.n_steps = o.n_steps;
    tc.jump_trials = o.jump_trials;
    tc.epsilon = o.epsilon;
    tc.epochs = o.epochs;
    tc.seed = o.seed;
    tc.threads = o.threads;
    tc.u0 = u0;
    tc.phase1 = {o.phase1_lr, o.phase1_batch, o.phase1_iters};
    tc.phase2 = {o.phase2_lr, o.phase2_batch, o.phase2_iters};
    tc.validation_size = o.validation_size;
    tc.check_every = o.check_every;
    tc.min_iterations = o.min_iters;
    tc.stop_threshold = o.stop_threshold;
    return tc;
}

int cmd_train(const Options& o, const std::string& intensity_path, const std::string& variant_name,
              const std::string& u0_arg, const std::string& out_model,
              const std::string& out_report) {
    const auto curve = intensity::read_csv(intensity_path);
    const auto sampled = intensity::SampledCurve::from(curve);
    const RiskParams params = o.risk();
    const sim::U0Spec u0 = u0_arg == "uniform" ? sim::U0Spec::uniform_interior()
                                               : sim::U0Spec::fixed_at(std::stod(u0_arg));
    const auto tc = train_config(o, u0);
    const opt::Variant variant = opt::variant_from_name(variant_name);

    Meta meta = o.echo("train");
    meta.emplace_back("intensity", intensity_path);
    meta.emplace_back("variant", variant_name);
    meta.emplace_back("u0", u0_arg);
    meta.emplace_back("phase1_batch", std::to_string(o.phase1_batch));
    meta.emplace_back("phase1_iters", std::to_string(o.phase1_iters));
    meta.emplace_back("phase2_batch", std::to_string(o.phase2_batch));
    meta.emplace_back("phase2_iters", std::to_string(o.phase2_iters));

    if (variant == opt::Variant::policy) {
        opt::GridPolicy policy(UtilizationGrid::make(params.delta), o.n_steps, params.r_min,
                               params.r_max);
        const auto report = opt::train_policy(policy, sampled, params, tc);
        auto surface = policy.to_surface();
        surface.times = TimeGrid::make(params.horizon, o.n_steps);
        hjb::write_surface_csv(surface, out_model, meta);
        if (!out_report.empty()) opt::write_train_report_csv(report, out_report, meta);
    } else {
        auto model = opt::ParametricModel::line_initialized(
            variant, params.u_star, params.horizon / o.n_steps, params.r_min, params.r_max);
        const auto report = opt::train_parametric(model, sampled, params, tc);
        Meta tmeta = meta;
        opt::save_parametric_json(model, out_model, o.seed, report.final_validation, tmeta);
        if (!out_report.empty()) opt::write_train_report_csv(report, out_report, meta);
    }
    return kOk;
}

struct LoadedModel {
    std::string label;
    bool is_policy = false;
    opt::GridPolicy policy;
    opt::ParametricModel parametric;
};

LoadedModel load_model(const std::string& path, const Options& o) {
    LoadedModel m;
    m.label = stem_of(path);
    if (std::filesystem::path(path).extension() == ".json") {
        m.parametric = opt::load_parametric_json(path);
        m.parametric.set_tau(o.horizon / o.n_steps);
        return m;
    }
    m.is_policy = true;
    const auto surface = hjb::read_rate_surface_csv(path);
    m.policy = opt::GridPolicy::from_surface(surface, o.n_steps, o.r_min, o.r_max);
    return m;
}

int cmd_evaluate(const Options& o, const std::vector<std::string>& model_paths,
                 const std::string& intensity_path, const std::vector<std::string>& u0_list,
                 const std::string& mode, const std::string& out_stats,
                 const std::string& out_raw_stats, const std::string& hist_dir) {
    if (mode != "exact")
        throw InputError("evaluation runs the exact sampler; got mode '" + mode + "'");
    const auto curve = intensity::read_csv(intensity_path);
    const auto sampled = intensity::SampledCurve::from(curve);
    const RiskParams params = o.risk();

    sim::SimConfig sc;
    sc.n_steps = o.n_steps;
    sc.jump_trials = o.jump_trials;
    sc.epsilon = o.epsilon;
    sc.mode = sim::JumpMode::exact;
    sc.seed = o.seed;
    sc.n_paths = o.n_paths;
    sc.threads = o.threads;

    std::vector<report::PnLStats> risk_rows, raw_rows;
    for (const auto& path : model_paths) {
        const LoadedModel m = load_model(path, o);
        for (const auto& u0_arg : u0_list) {
            const sim::U0Spec u0 = u0_arg == "uniform"
                                       ? sim::U0Spec::uniform_interior()
                                       : sim::U0Spec::fixed_at(std::stod(u0_arg));
            const auto batch =
                m.is_policy ? sim::simulate_batch(m.policy, sampled, params, sc, u0)
                            : sim::simulate_batch(m.parametric, sampled, params, sc, u0);
            const auto risk_vals = report::risk_adjusted_pnl(batch, params);
            const auto raw_vals = report::raw_pnl(batch, params);
            auto risk_stat = report::stats(risk_vals);
            auto raw_stat = report::stats(raw_vals);
            risk_stat.model = raw_stat.model = m.label;
            risk_stat.u0 = raw_stat.u0 = u0_arg;
            risk_rows.push_back(risk_stat);
            raw_rows.push_back(raw_stat);
            if (!hist_dir.empty()) {
                std::filesystem::create_directories(hist_dir);
                Meta hmeta = o.echo("evaluate");
                hmeta.emplace_back("model", m.label);
                hmeta.emplace_back("u0", u0_arg);
                report::write_histogram_csv(
                    report::histogram(risk_vals),
                    hist_dir + "/" + m.label + "_u0_" + u0_arg + "_risk_adjusted.csv", hmeta);
                report::write_histogram_csv(report::histogram(raw_vals),
                                            hist_dir + "/" + m.label + "_u0_" + u0_arg + "_raw.csv",
                                            hmeta);
            }
        }
    }
    Meta meta = o.echo("evaluate");
    meta.emplace_back("intensity", intensity_path);
    meta.emplace_back("n_paths", std::to_string(o.n_paths));
    report::write_stats_csv(risk_rows, out_stats, meta);
    if (!out_raw_stats.empty()) report::write_stats_csv(raw_rows, out_raw_stats, meta);
    return kOk;
}

int cmd_validate(const std::string& candidate, const std::string& reference, double mean_threshold,
                 double max_threshold) {
    const auto a = hjb::read_rate_surface_csv(candidate);
    const auto b = hjb::read_rate_surface_csv(reference);
    const auto [mean_bps, max_bps] = report::surface_errors(a, b);
    std::cout << "mean_error_bps=" << csv::format_double(mean_bps) << "\n"
              << "max_error_bps=" << csv::format_double(max_bps) << "\n";
    if (mean_threshold > 0.0 && mean_bps > mean_threshold) return kThresholdExceeded;
    if (max_threshold > 0.0 && max_bps > max_threshold) return kThresholdExceeded;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interest-rate model design and evaluation for lending pools"};
    app.require_subcommand(1);

    Options o;
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override)");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit arrival intensities from pool history");
    std::string history_path, out_intensity = "intensity.csv", out_fit_report;
    int bins = 4;
    cal->add_option("--history", history_path, "pool history CSV")->required();
    cal->add_option("--bins", bins, "rate bins (K)");
    cal->add_option("--out-intensity", out_intensity, "output intensity curve CSV");
    cal->add_option("--out-report", out_fit_report, "output per-bin fit report CSV");
    register_shared(cal, o);

    // solve
    auto* sol = app.add_subcommand("solve", "solve the linear-intensity control problem");
    intensity::LinearIntensity lin;
    std::string out_rate = "rate_surface.csv", out_value = "value_surface.csv";
    sol->add_option("--a0-plus", lin.a0_plus, "up intensity intercept")->required();
    sol->add_option("--a1-plus", lin.a1_plus, "up intensity slope (<= 0)")->required();
    sol->add_option("--a0-minus", lin.a0_minus, "down intensity intercept")->required();
    sol->add_option("--a1-minus", lin.a1_minus, "down intensity slope (>= 0)")->required();
    sol->add_option("--out-rate", out_rate, "output rate surface CSV");
    sol->add_option("--out-value", out_value, "output value surface CSV");
    register_shared(sol, o);

    // train
    auto* tr = app.add_subcommand("train", "train a rate model on the relaxed simulator");
    std::string intensity_path, variant = "policy", train_u0 = "uniform";
    std::string out_model = "model.csv", out_train_report;
    tr->add_option("--intensity", intensity_path, "intensity curve CSV")->required();
    tr->add_option("--variant", variant, "policy | linear | bilinear | adaptive");
    tr->add_option("--u0", train_u0, "starting utilization: number or 'uniform'");
    tr->add_option("--out-model", out_model, "output model file (surface CSV or JSON)");
    tr->add_option("--out-report", out_train_report, "output training report CSV");
    tr->add_option("--phase1-lr", o.phase1_lr, "phase 1 learning rate");
    tr->add_option("--phase1-batch", o.phase1_batch, "phase 1 batch size");
    tr->add_option("--phase1-iters", o.phase1_iters, "phase 1 iterations");
    tr->add_option("--phase2-lr", o.phase2_lr, "phase 2 learning rate");
    tr->add_option("--phase2-batch", o.phase2_batch, "phase 2 batch size");
    tr->add_option("--phase2-iters", o.phase2_iters, "phase 2 iteration cap");
    tr->add_option("--validation-size", o.validation_size, "validation sample size");
    tr->add_option("--check-every", o.check_every, "validation check interval");
    tr->add_option("--min-iters", o.min_iters, "iterations before stopping checks");
    tr->add_option("--stop-threshold", o.stop_threshold, "validation stopping threshold");
    tr->add_option("--epochs", o.epochs, "gradient steps per iteration sample");
    register_shared(tr, o);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "simulate models and report PnL statistics");
    std::vector<std::string> model_paths, u0_list{"0.9"};
    std::string eval_mode = "exact", out_stats = "stats.csv", out_raw_stats, hist_dir;
    ev->add_option("--model", model_paths, "model file(s): JSON or rate-surface CSV")->required();
    ev->add_option("--intensity", intensity_path, "intensity curve CSV")->required();
    ev->add_option("--u0", u0_list, "starting utilizations (numbers or 'uniform')");
    ev->add_option("--mode", eval_mode, "sampling mode (must be exact)");
    ev->add_option("--paths", o.n_paths, "simulated paths per model/u0");
    ev->add_option("--out-stats", out_stats, "risk-adjusted stats CSV");
    ev->add_option("--out-raw-stats", out_raw_stats, "raw PnL stats CSV");
    ev->add_option("--hist-dir", hist_dir, "directory for histogram CSVs");
    register_shared(ev, o);

    // validate
    auto* va = app.add_subcommand("validate", "compare two rate surfaces");
    std::string cand_path, ref_path;
    double mean_threshold = 0.0, max_threshold = 0.0;
    va->add_option("--candidate", cand_path, "candidate surface CSV")->required();
    va->add_option("--reference", ref_path, "reference surface CSV")->required();
    va->add_option("--mean-threshold", mean_threshold, "mean error threshold in bps (0 = off)");
    va->add_option("--max-threshold", max_threshold, "max error threshold in bps (0 = off)");

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) {
            overlay_config(app, config_path);
            // re-run callbacks so overlaid values land in the bound variables
            for (CLI::App* sub : app.get_subcommands()) {
                for (CLI::Option* opt : sub->get_options())
                    if (opt->count() > 0) opt->run_callback();
            }
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    }

    try {
        if (app.got_subcommand(cal))
            return cmd_calibrate(o, history_path, out_intensity, out_fit_report, bins);
        if (app.got_subcommand(sol)) return cmd_solve(o, lin, out_rate, out_value);
        if (app.got_subcommand(tr))
            return cmd_train(o, intensity_path, variant, train_u0, out_model, out_train_report);
        if (app.got_subcommand(ev))
            return cmd_evaluate(o, model_paths, intensity_path, u0_list, eval_mode, out_stats,
                                out_raw_stats, hist_dir);
        if (app.got_subcommand(va))
            return cmd_validate(cand_path, ref_path, mean_threshold, max_threshold);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return kCalibrationFailed;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kDiverged;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kTrainingFailed;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    }
    return kOk;
}
