#include "gridcpd/experiment.hpp"
#include "gridcpd/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace gridcpd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCertification = 2;
constexpr int kExitSolver = 3;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    bool override_identifiability = false;
};

ExperimentConfig load_config(const GlobalArgs& args) {
    if (args.config_path.empty()) {
        throw ConfigError("--config is required for this command");
    }
    ExperimentConfig config = ExperimentConfig::from_file(args.config_path);
    if (args.seed_override) config.base_seed = *args.seed_override;
    return config;
}

int cmd_simulate(const GlobalArgs& args) {
    const ExperimentConfig config = load_config(args);
    const SimulationResult truth = simulate_truth(config);
    const fs::path out(args.out_dir);
    io::write_tensor_text(out / "truth.tensor.txt", truth.state);
    io::write_tensor_binary(out / "truth.tensor.bin", truth.state);
    io::write_meta(out / "truth.meta.txt", truth.meta);
    io::write_state_csv(out / "truth.csv", truth.state, truth.meta);
    std::cout << "simulated " << truth.state.dim0() << " phases x " << truth.state.dim1()
              << " measurements x " << truth.state.dim2() << " steps ("
              << to_string(config.profile_mode) << ")\n"
              << "wrote " << (out / "truth.tensor.txt").string() << " (+ .bin, meta, csv)\n";
    return kExitOk;
}

int cmd_check(const GlobalArgs& args) {
    const ExperimentConfig config = load_config(args);
    const auto reports = certification_reports(config);
    bool all_ok = true;
    std::string text;
    for (const auto& [level, report] : reports) {
        text += "level " + std::to_string(level.first) + ":" + std::to_string(level.second) +
                "\n" + report.to_text() + "\n";
        all_ok = all_ok && report.satisfied;
    }
    std::cout << text;
    if (!args.out_dir.empty()) {
        std::string kv;
        for (const auto& [level, report] : reports) {
            kv += "level = " + std::to_string(level.first) + ":" +
                  std::to_string(level.second) + "\n" + report.to_key_values();
        }
        io::atomic_write(fs::path(args.out_dir) / "certification.txt", text);
        io::atomic_write(fs::path(args.out_dir) / "certification.kv", kv);
    }
    return all_ok ? kExitOk : kExitCertification;
}

int cmd_sample(const GlobalArgs& args, int run_index) {
    const ExperimentConfig config = load_config(args);
    const FeederModel feeder = load_feeder(config);
    const SimulationResult truth = simulate(
        feeder,
        make_profiles(feeder, config.profile_mode, config.profile_seed, config.time_steps));
    const SampleDraw draw = draw_run_masks(config, feeder, truth.meta, run_index);
    const fs::path out(args.out_dir);
    if (draw.slab) io::write_slab_scheme(out / "scheme.txt", *draw.slab);
    if (draw.fiber) io::write_fiber_scheme(out / "scheme.txt", *draw.fiber);
    io::write_mask(out / "scheme_mask.txt", draw.scheme_mask);
    io::write_mask(out / "extras_mask.txt", draw.extras);
    io::write_mask(out / "observed_mask.txt", draw.observed);
    std::cout << "run " << run_index << " sampling: " << sampling_fraction(draw.observed)
              << "% of entries observed\n"
              << "wrote scheme and masks under " << out.string() << "\n";
    return kExitOk;
}

int cmd_fit(const GlobalArgs& args, const std::string& tensor_path,
            const std::string& mask_path, int rank, const FitOptions& opts) {
    const Tensor3 x = io::read_tensor_text(tensor_path);
    FitResult fit;
    if (mask_path.empty()) {
        fit = als_fit(x, rank, opts);
    } else {
        fit = masked_als_fit(x, io::read_mask(mask_path), rank, opts);
    }
    const fs::path out(args.out_dir);
    io::write_fit_result(out / "fit.txt", fit);
    std::cout << "rank " << rank << " fit: objective " << fit.final_objective() << ", "
              << (fit.converged ? "converged" : "did not converge") << " after "
              << fit.sweeps_used << " sweeps (restart " << fit.restart_index << ")\n"
              << "wrote " << (out / "fit.txt").string() << "\n";
    return fit.converged ? kExitOk : kExitSolver;
}

int cmd_evaluate(const GlobalArgs& args, const std::string& truth_path,
                 const std::string& estimate_path, const std::string& fit_path,
                 const std::string& mask_path, const std::string& meta_path,
                 const std::string& scope_name) {
    const Tensor3 truth = io::read_tensor_text(truth_path);
    Tensor3 estimate;
    if (!fit_path.empty()) {
        estimate = reconstruct(io::read_fit_result(fit_path).factors);
    } else if (!estimate_path.empty()) {
        estimate = io::read_tensor_text(estimate_path);
    } else {
        throw ConfigError("evaluate needs --estimate or --fit");
    }
    const MaskTensor mask = io::read_mask(mask_path);
    const StateTensorMeta meta = io::read_meta(meta_path);
    const MetricsReport report =
        evaluate(truth, estimate, mask, meta, metric_scope_from_string(scope_name));
    std::cout << report.to_table();
    if (!args.out_dir.empty()) {
        io::atomic_write(fs::path(args.out_dir) / "metrics.kv", report.to_key_values());
    }
    return kExitOk;
}

int cmd_sweep_rank(const GlobalArgs& args, const std::string& tensor_path, int k_max) {
    Tensor3 x;
    if (!tensor_path.empty()) {
        x = io::read_tensor_text(tensor_path);
    } else {
        x = simulate_truth(load_config(args)).state;
    }
    FitOptions opts;
    if (!args.config_path.empty()) {
        const ExperimentConfig c = load_config(args);
        opts = c.fit_options(c.base_seed);
    } else if (args.seed_override) {
        opts.seed = *args.seed_override;
    }
    const auto points = rank_sweep(x, k_max, opts);
    std::string csv = "k,relative_error\n";
    for (const auto& p : points) {
        csv += std::to_string(p.rank) + "," + (p.ok ? io::format_double(p.relative_error) : "nan") +
               "\n";
        if (!p.ok) std::cerr << "rank " << p.rank << " failed: " << p.message << "\n";
    }
    io::atomic_write(fs::path(args.out_dir) / "rank_curve.csv", csv);
    std::cout << csv;
    return kExitOk;
}

std::string scenario_summary(const std::string& name, const ScenarioResult& s) {
    std::ostringstream os;
    os.precision(6);
    os << "=== " << name << " ===\n";
    os << "certified: " << (s.certification.satisfied ? "yes" : "NO") << " ("
       << s.certification.which_condition << ")\n";
    os << "mean sampling: " << s.mean_sampling_pct << "%\n";
    if (s.non_converged > 0) os << "non-converged runs excluded: " << s.non_converged << "\n";
    os << s.aggregated.to_table();
    return os.str();
}

int cmd_run(const GlobalArgs& args) {
    const ExperimentConfig config = load_config(args);
    const fs::path out(args.out_dir);
    std::ostringstream log;
    const ExperimentResult result =
        run_experiment(config, args.override_identifiability, &log);

    io::write_tensor_text(out / "truth.tensor.txt", result.truth.state);
    io::write_meta(out / "truth.meta.txt", result.truth.meta);

    std::string summary, kv, cert_text;
    std::string runs_kv;
    auto emit_scenario = [&](const std::string& name, const ScenarioResult& s) {
        summary += scenario_summary(name, s) + "\n";
        cert_text += "=== " + name + " ===\n" + s.certification.to_text() + "\n";
        kv += s.aggregated.to_key_values(name + ".");
        for (const RunRecord& rec : s.runs) {
            const std::string prefix = name + ".run" + std::to_string(rec.run_index) + ".";
            runs_kv += prefix + "seed = " + std::to_string(rec.seed) + "\n";
            runs_kv += prefix + "converged = " + std::to_string(rec.converged ? 1 : 0) + "\n";
            runs_kv += prefix + "objective = " + io::format_double(rec.final_objective) + "\n";
            runs_kv +=
                prefix + "sampling_pct = " + io::format_double(rec.sampling_pct) + "\n";
            runs_kv += rec.metrics.to_key_values(prefix);
        }
    };

    if (result.scenario) {
        emit_scenario(config.scheme, *result.scenario);
    }
    for (const auto& [level, scenario] : result.sweep) {
        emit_scenario(config.scheme + "_" + std::to_string(level.first) + "x" +
                          std::to_string(level.second),
                      scenario);
    }
    if (!result.sweep.empty()) {
        io::atomic_write(out / "curve.csv", sweep_curve_csv(config.scheme, result.sweep));
    }
    io::atomic_write(out / "summary.txt", summary);
    io::atomic_write(out / "summary.kv", kv);
    io::atomic_write(out / "runs.kv", runs_kv);
    io::atomic_write(out / "certification.txt", cert_text);
    const std::string warnings = log.str();
    if (!warnings.empty()) std::cerr << warnings;
    std::cout << summary;
    std::cout << "wrote results under " << out.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"model-free grid state estimation via low-rank tensor completion"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "experiment config file")
        ->expected(1);
    app.add_option("--out", args.out_dir, "output directory (default: out)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "override the config base seed");
    app.add_flag("--override-identifiability", args.override_identifiability,
                 "run even when the sampling scheme fails certification");
    app.fallthrough();

    auto* sim = app.add_subcommand("simulate", "simulate the feeder and write the state tensor");
    auto* check = app.add_subcommand("check", "certify the configured sampling scheme");
    auto* sample = app.add_subcommand("sample", "emit the sampling scheme and mask files");
    int sample_run = 0;
    sample->add_option("--run", sample_run, "run index whose draw to emit (default 0)");

    auto* fit = app.add_subcommand("fit", "fit a CPD model to a tensor file");
    std::string fit_tensor, fit_mask;
    int fit_rank = 0;
    FitOptions fit_opts;
    fit->add_option("--tensor", fit_tensor, "tensor text file")->required();
    fit->add_option("--mask", fit_mask, "observation mask file (omit for full data)");
    fit->add_option("--rank", fit_rank, "model rank")->required();
    fit->add_option("--restarts", fit_opts.restarts, "number of seeded restarts");
    fit->add_option("--max-sweeps", fit_opts.max_sweeps, "sweep limit per restart");
    fit->add_option("--rel-tol", fit_opts.rel_tol, "relative objective-change stop");
    fit->add_option("--abs-tol", fit_opts.abs_tol,
                    "absolute objective-change stop, relative to the data norm");
    fit->add_option("--ridge", fit_opts.ridge, "factor norm penalty");

    auto* eval = app.add_subcommand("evaluate", "error metrics of an estimate vs. truth");
    std::string eval_truth, eval_estimate, eval_fit, eval_mask, eval_meta;
    std::string eval_scope = "held-out";
    eval->add_option("--truth", eval_truth, "ground-truth tensor file")->required();
    eval->add_option("--estimate", eval_estimate, "estimate tensor file");
    eval->add_option("--fit", eval_fit, "fit result file (reconstructed as the estimate)");
    eval->add_option("--mask", eval_mask, "observation mask file")->required();
    eval->add_option("--meta", eval_meta, "state meta file")->required();
    eval->add_option("--scope", eval_scope, "held-out | all");

    auto* sweep = app.add_subcommand("sweep-rank", "relative error of rank-k fits, k=1..kmax");
    std::string sweep_tensor;
    int sweep_kmax = 20;
    sweep->add_option("--tensor", sweep_tensor,
                      "tensor text file (omit to simulate from the config)");
    sweep->add_option("--kmax", sweep_kmax, "largest rank (default 20)");

    auto* run = app.add_subcommand("run", "full Monte-Carlo experiment from a config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    if (seed_opt->count() > 0) args.seed_override = seed_value;

    try {
        if (sim->parsed()) return cmd_simulate(args);
        if (check->parsed()) return cmd_check(args);
        if (sample->parsed()) return cmd_sample(args, sample_run);
        if (fit->parsed()) {
            if (args.seed_override) fit_opts.seed = *args.seed_override;
            return cmd_fit(args, fit_tensor, fit_mask, fit_rank, fit_opts);
        }
        if (eval->parsed()) {
            return cmd_evaluate(args, eval_truth, eval_estimate, eval_fit, eval_mask, eval_meta,
                                eval_scope);
        }
        if (sweep->parsed()) return cmd_sweep_rank(args, sweep_tensor, sweep_kmax);
        if (run->parsed()) return cmd_run(args);
        std::cerr << "no command given\n";
        return kExitUsage;
    } catch (const CertificationError& e) {
        std::cerr << "certification failure: " << e.what() << "\n";
        return kExitCertification;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
