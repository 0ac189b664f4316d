#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpslam/config.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/experiment.hpp"

using namespace mpslam;
namespace fs = std::filesystem;

namespace {

const char* kToy =
    "scenario.n_steps = 8\n"
    "mc.runs = 2\n"
    "baseline.particles = 100\n"
    "baseline.runs = 1\n";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mpslam_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(ParseConfig, DefaultsAreResolved) {
    const ExperimentConfig c = parse_config("");
    EXPECT_EQ(c.resolved.at("scenario.mu_fa"), "5");
    EXPECT_DOUBLE_EQ(c.filter.clutter.mean_count, 5.0);
    EXPECT_DOUBLE_EQ(c.scenario.clutter.mean_count, 5.0);
    EXPECT_EQ(c.mc.runs, 1);
    EXPECT_TRUE(c.particles.empty());
    EXPECT_EQ(config_defaults().size(), c.resolved.size());
}

TEST(ParseConfig, CommentsAndOverrides) {
    const ExperimentConfig c = parse_config("# comment\nscenario.experiment = 2  # inline\nfilter.fusion = product\n");
    EXPECT_EQ(c.scenario.experiment, 2);
    EXPECT_FALSE(c.scenario.obstacles.empty());
    EXPECT_EQ(c.filter.fusion, FusionRule::kProduct);
}

TEST(ParseConfig, RejectsUnknownAndDuplicateKeys) {
    try {
        parse_config("filter.p_dee = 0.5\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("filter.p_de"), std::string::npos);
    }
    EXPECT_THROW(parse_config("mc.runs = 2\nmc.runs = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("mc.runs\n"), ConfigError);
    EXPECT_THROW(parse_config("mc.runs = two\n"), ConfigError);
}

TEST(ParseConfig, RejectsOutOfRangeValues) {
    EXPECT_THROW(parse_config("filter.p_pr = 0.6\nfilter.p_de = 0.5\n"), DomainError);
    EXPECT_THROW(parse_config("scenario.p_d = 1.5\n"), DomainError);
    EXPECT_THROW(parse_config("scenario.experiment = 2\nscenario.walls =\n"), GeometryError);
}

TEST(ParseConfig, FormatRoundTrips) {
    const ExperimentConfig a = parse_config("scenario.n_steps = 12\nfilter.mu_n = 0.2\n");
    const ExperimentConfig b = parse_config(format_config(a));
    EXPECT_EQ(a.resolved, b.resolved);
}

TEST(ResolveOutputDir, EnvironmentOverride) {
    const ExperimentConfig c = parse_config("output.dir = out/x\n");
    ::setenv(kOutputRootEnv, "/tmp/root", 1);
    EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/root/out/x"));
    ::unsetenv(kOutputRootEnv);
    EXPECT_EQ(resolve_output_dir(c), fs::path("out/x"));
    const ExperimentConfig abs = parse_config("output.dir = /abs/dir\n");
    ::setenv(kOutputRootEnv, "/tmp/root", 1);
    EXPECT_EQ(resolve_output_dir(abs), fs::path("/abs/dir"));
    ::unsetenv(kOutputRootEnv);
}

TEST(ScenarioForRun, SeedsAreBasePlusIndex) {
    const ExperimentConfig c = parse_config("mc.base_seed = 40\n");
    EXPECT_EQ(scenario_for_run(c, 0).seed, 40u);
    EXPECT_EQ(scenario_for_run(c, 3).seed, 43u);
}

TEST(RunExperiment, OneRealizationPerRunAndAlgorithm) {
    const ExperimentConfig c = parse_config(kToy);
    const auto results = run_experiment(c);
    ASSERT_EQ(results.size(), 2u);
    EXPECT_EQ(results[0].name, "sp");
    EXPECT_EQ(results[0].runs.size(), 2u);
    EXPECT_EQ(results[1].name, "pf100");
    EXPECT_EQ(results[1].runs.size(), 1u);
    for (const auto& alg : results)
        for (const auto& run : alg.runs) EXPECT_EQ(run.record.steps.size(), 8u);
    const AlgorithmSummary s = summarize(results[0]);
    EXPECT_EQ(s.runs, 2);
    EXPECT_EQ(s.rmse.values.size(), 8u);
}

TEST(RunExperiment, OutputsAreReproducibleAndThreadIndependent) {
    const ExperimentConfig serial = parse_config(kToy);
    const ExperimentConfig parallel = parse_config(std::string(kToy) + "mc.threads = 2\n");
    const fs::path a = scratch_dir("a"), b = scratch_dir("b"), c = scratch_dir("c");
    write_results(serial, run_experiment(serial), a);
    write_results(serial, run_experiment(serial), b);
    write_results(serial, run_experiment(parallel), c);
    for (const char* file : {"rmse.csv", "ospa.csv", "cardinality.csv", "ecdf.csv", "runs.csv",
                             "runs/sp/run_0.csv", "runs/pf100/run_0.csv"}) {
        ASSERT_TRUE(fs::exists(a / file)) << file;
        EXPECT_EQ(slurp(a / file), slurp(b / file)) << file;
        EXPECT_EQ(slurp(a / file), slurp(c / file)) << file;
    }
    EXPECT_TRUE(fs::exists(a / "summary.json"));
    EXPECT_NE(slurp(a / "summary.json").find("\"schema_version\": 1"), std::string::npos);
    EXPECT_EQ(slurp(a / "rmse.csv").substr(0, 43), "algorithm,step,rmse,runs_used,runs_excluded");
    for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(WriteSimulation, WritesMeasurementsAndTrajectory) {
    const ExperimentConfig c = parse_config(kToy);
    const fs::path d = scratch_dir("sim");
    write_simulation(c, d);
    EXPECT_EQ(slurp(d / "measurements.csv").substr(0, 37), "run,n,j,z_d,z_aoa,z_aod,origin_label\n");
    EXPECT_TRUE(fs::exists(d / "trajectory.csv"));
    fs::remove_all(d);
}
