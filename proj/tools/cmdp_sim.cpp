// Command-line front end: run experiments, render plots, check configs.

#include "pdpowers/harness.hpp"
#include "pdpowers/plot.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <random>

using namespace pdpowers;

namespace {

int cmd_run(const std::string& config, const std::string& out, int workers, const std::string& diagnostics) {
    RunConfig cfg = load_config(config);
    if (!out.empty()) cfg.out_dir = out;
    if (workers >= 0) cfg.workers = workers;
    if (!diagnostics.empty()) cfg.diagnostics = diagnostics == "on";
    ExperimentResult res = run_experiment(cfg, seed_offset_from_env());
    fmt::print("{}", summary_text(cfg, res));
    fmt::print("wrote {} files to {}\n", res.files.size(), cfg.out_dir.string());
    return res.ok() ? 0 : 1;
}

int cmd_plot(const std::string& in, const std::string& out) {
    for (const auto& p : emit_plot(in, out)) fmt::print("wrote {}\n", p.string());
    return 0;
}

int cmd_validate(const std::string& config) {
    RunConfig cfg = load_config(config);
    CmdpInstance inst = cfg.build_instance();
    std::mt19937_64 rng(0x5eed);
    ValidationReport report = validate_instance(inst, 1000, rng);
    fmt::print("{}", report.to_string());
    if (!report.passed) return 1;
    ComparatorResult cmp = constrained_comparator(inst, averaged_reward(inst, cfg.K));
    LearnerConfig lc = cfg.learner_config(cmp.gamma);
    lc.validate();
    fmt::print("slater margin: {:.10g}\n", cmp.gamma);
    fmt::print("learner: K={} alpha={:.6g} eta={:.6g} theta_mix={:.6g} lambda={:.6g} delta={:.6g}\n", lc.K, lc.alpha,
               lc.eta, lc.theta_mix, lc.lambda, lc.delta);
    fmt::print("config ok\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Primal-dual policy optimization for linear mixture CMDPs"};
    app.require_subcommand(1);

    std::string run_config, run_out, run_diag;
    int run_workers = -1;
    auto* run = app.add_subcommand("run", "run all seeds and write CSVs and a summary");
    run->add_option("--config", run_config, "config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_out, "output directory (overrides out_dir)");
    run->add_option("--workers", run_workers, "parallel seed workers")->check(CLI::NonNegativeNumber);
    run->add_option("--diagnostics", run_diag, "inline assertions")->check(CLI::IsMember({"on", "off"}));

    std::string plot_in, plot_out;
    auto* plot = app.add_subcommand("plot", "render regret.svg and violation.svg from aggregates");
    plot->add_option("--in", plot_in, "directory with aggregate CSVs")->required()->check(CLI::ExistingDirectory);
    plot->add_option("--out", plot_out, "output directory")->required();

    std::string val_config;
    auto* validate = app.add_subcommand("validate", "check the instance and config without running");
    validate->add_option("--config", val_config, "config file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_config, run_out, run_workers, run_diag);
        if (*plot) return cmd_plot(plot_in, plot_out);
        if (*validate) return cmd_validate(val_config);
    } catch (const InvariantViolation& e) {
        fmt::print(stderr, "invariant violated: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 1;
}
