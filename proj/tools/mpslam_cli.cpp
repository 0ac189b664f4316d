// Command-line experiment runner: run, validate and simulate.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mpslam/config.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/experiment.hpp"

namespace {

int cmd_validate(const std::string& path) {
    const mpslam::ExperimentConfig cfg = mpslam::load_config(path);
    std::cout << "# configuration is valid; effective values:\n" << mpslam::format_config(cfg);
    std::cout << "# output directory: " << mpslam::resolve_output_dir(cfg).string() << "\n";
    return 0;
}

int cmd_run(const std::string& path) {
    const mpslam::ExperimentConfig cfg = mpslam::load_config(path);
    const auto dir = mpslam::resolve_output_dir(cfg);
    const auto results = mpslam::run_experiment(cfg);
    mpslam::write_results(cfg, results, dir);
    for (const auto& r : results) {
        const auto s = mpslam::summarize(r);
        std::printf("%-10s runs %d failed %d lost %d mean step %.3f ms final<0.1m %.1f%%\n", s.name.c_str(), s.runs,
                    s.failed, s.lost, 1e3 * s.mean_step_seconds, 100.0 * s.final_error_below_10cm);
    }
    std::printf("results written to %s\n", dir.string().c_str());
    return 0;
}

int cmd_simulate(const std::string& path) {
    const mpslam::ExperimentConfig cfg = mpslam::load_config(path);
    const auto dir = mpslam::resolve_output_dir(cfg);
    mpslam::write_simulation(cfg, dir);
    std::printf("measurements written to %s\n", (dir / "measurements.csv").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sigma-point multipath SLAM experiments"};
    app.require_subcommand(1);
    std::string config;
    auto* run = app.add_subcommand("run", "Run the Monte-Carlo experiment of a config file");
    run->add_option("config", config, "Config file")->required();
    auto* validate = app.add_subcommand("validate", "Check a config file and print the effective values");
    validate->add_option("config", config, "Config file")->required();
    auto* simulate = app.add_subcommand("simulate", "Write the measurement streams of a config file");
    simulate->add_option("config", config, "Config file")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config);
        if (validate->parsed()) return cmd_validate(config);
        return cmd_simulate(config);
    } catch (const mpslam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
