#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simlab/harness.hpp"

namespace {

std::string cell(double v) {
    if (std::isnan(v)) return "-";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void print_result(const simlab::ExperimentResult& res) {
    std::printf("experiment: %s  (config hash %s)\n",
                res.config.experiment_id.c_str(), res.hash.c_str());
    std::printf("%-34s %14s %12s %14s %10s %-8s %-11s %s\n", "row", "estimate",
                "mc_error", "target", "tol", "rule", "basis", "status");
    for (const auto& r : res.rows) {
        std::printf("%-34s %14s %12s %14s %10s %-8s %-11s %s\n",
                    r.name.c_str(), cell(r.estimate).c_str(),
                    cell(r.mc_error).c_str(), cell(r.target).c_str(),
                    cell(r.tolerance).c_str(), simlab::to_string(r.rule),
                    simlab::to_string(r.basis),
                    r.rule == simlab::RowRule::Info ? "info"
                                                    : (r.pass ? "pass" : "FAIL"));
    }
    std::printf("wall time: %.2fs  overall: %s\n", res.wall_time_sec,
                res.all_pass() ? "PASS" : "FAIL");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simlab: stochastic simulation experiments"};
    app.require_subcommand(1);

    auto* list_cmd =
        app.add_subcommand("list-experiments", "list available experiments");

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false, quick = false;
    int replicas = 0;
    std::vector<int> criteria;

    auto* run_cmd = app.add_subcommand("run", "run one experiment from a config");
    run_cmd->add_option("--config", config_path, "config file path")->required();
    run_cmd->add_option("--seed", seed, "master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    run_cmd->add_option("--replicas", replicas, "replica multiplier override");
    run_cmd->add_option("--out", out_dir, "output directory");

    std::string suite = "acceptance";
    auto* verify_cmd =
        app.add_subcommand("verify", "run the acceptance criteria suite");
    verify_cmd->add_option("--suite", suite, "suite name (acceptance)");
    verify_cmd->add_flag("--quick", quick, "reduced sample sizes (informational)");
    verify_cmd->add_option("--seed", seed, "master seed")
        ->each([&](const std::string&) { seed_set = true; });
    verify_cmd->add_option("--out", out_dir, "emit per-experiment outputs here");
    verify_cmd->add_option("--criterion", criteria,
                           "restrict to these criterion numbers");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            for (const auto& e : simlab::list_experiments())
                std::printf("%-26s %s\n", e.id.c_str(), e.summary.c_str());
            return 0;
        }
        if (run_cmd->parsed()) {
            simlab::ExperimentConfig cfg = simlab::load_config_file(config_path);
            if (seed_set) cfg.master_seed = seed;
            if (replicas > 0) cfg.replicas = replicas;
            simlab::ExperimentResult res = simlab::run_experiment(cfg);
            print_result(res);
            std::string dest = !out_dir.empty()
                                   ? out_dir
                                   : (!cfg.output_path.empty() ? cfg.output_path
                                                               : "simlab_out");
            simlab::emit_all(res, dest);
            std::printf("results written to %s\n", dest.c_str());
            return res.all_pass() ? 0 : 1;
        }
        if (verify_cmd->parsed()) {
            if (suite != "acceptance") {
                std::fprintf(stderr, "unknown suite: %s\n", suite.c_str());
                return 2;
            }
            simlab::VerifyOptions opt;
            opt.quick = quick;
            if (seed_set) opt.master_seed = seed;
            opt.out_dir = out_dir;
            opt.only = criteria;
            const auto outcomes = simlab::verify_acceptance(opt, std::cout);
            int failures = 0;
            for (const auto& o : outcomes)
                if (!o.pass) ++failures;
            return failures;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
