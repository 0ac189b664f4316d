#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mpslam/association.hpp"
#include "mpslam/config.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/experiment.hpp"
#include "mpslam/gaussmath.hpp"
#include "mpslam/geometry.hpp"
#include "mpslam/metrics.hpp"
#include "mpslam/simulator.hpp"

namespace py = pybind11;
using namespace mpslam;

namespace {

AgentState agent(const Eigen::VectorXd& x) {
    if (x.size() != AgentState::kDim) throw ShapeError("agent state must have 5 entries");
    return AgentState::from_vector(x);
}

py::dict summary_dict(const AlgorithmSummary& s) {
    py::dict d;
    d["name"] = s.name;
    d["runs"] = s.runs;
    d["failed"] = s.failed;
    d["lost"] = s.lost;
    d["lost_rate"] = s.lost_rate;
    d["mean_step_seconds"] = s.mean_step_seconds;
    d["final_error_below_0.1m"] = s.final_error_below_10cm;
    d["mean_ospa_last20"] = s.mean_ospa_last20;
    d["mean_detected_vas_last20"] = s.mean_detected_last20;
    d["olos_rmse_median"] = s.olos_rmse_median ? py::cast(*s.olos_rmse_median) : py::none();
    d["rmse"] = s.rmse.values;
    d["ospa_all"] = s.ospa_all;
    d["ospa_visible"] = s.ospa_visible;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sigma-point multipath SLAM: filter, particle baseline, simulator and metrics";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.attr("SUMMARY_SCHEMA_VERSION") = kSummarySchemaVersion;
    m.attr("OUTPUT_ROOT_ENV") = kOutputRootEnv;

    m.def(
        "unscented_transform",
        [](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const py::function& f) {
            const auto r = unscented_transform(GaussianBelief(mean, cov), [&](const Eigen::VectorXd& x) {
                return f(x).cast<Eigen::VectorXd>();
            });
            return py::make_tuple(r.mean, r.cov, r.cross);
        },
        py::arg("mean"), py::arg("cov"), py::arg("f"),
        "Mean, covariance and cross-covariance of f(x) for x ~ N(mean, cov).");
    m.def(
        "moment_match",
        [](const std::vector<double>& weights, const std::vector<Eigen::VectorXd>& means,
           const std::vector<Eigen::MatrixXd>& covs) {
            if (weights.size() != means.size() || weights.size() != covs.size())
                throw ShapeError("moment_match: weights, means and covs must have equal length");
            std::vector<WeightedGaussian> comps;
            for (std::size_t i = 0; i < weights.size(); ++i) comps.push_back({weights[i], GaussianBelief(means[i], covs[i])});
            const auto g = moment_match(comps);
            return py::make_tuple(g.mean, g.cov);
        },
        py::arg("weights"), py::arg("means"), py::arg("covs"));
    m.def(
        "gaussian_product",
        [](const std::vector<Eigen::VectorXd>& means, const std::vector<Eigen::MatrixXd>& covs) {
            if (means.size() != covs.size()) throw ShapeError("gaussian_product: means and covs differ in length");
            std::vector<GaussianBelief> f;
            for (std::size_t i = 0; i < means.size(); ++i) f.emplace_back(means[i], covs[i]);
            const auto g = gaussian_product(f);
            return py::make_tuple(g.mean, g.cov);
        },
        py::arg("means"), py::arg("covs"));

    m.def(
        "mirror_va", [](const Point& pa, const Point& a, const Point& b) { return mirror_va(pa, {a, b, true}); },
        py::arg("pa"), py::arg("wall_a"), py::arg("wall_b"));
    m.def(
        "measurement_fn",
        [](const Eigen::VectorXd& x, const Point& va, const Point& pa, bool reflected) {
            return measurement_fn(agent(x), {va, 0, reflected ? 0 : -1, reflected ? 1 : 0}, pa);
        },
        py::arg("x"), py::arg("va"), py::arg("pa"), py::arg("reflected"),
        "(range, AOA, AOD) of the path from `va` to the agent state x = [px, py, vx, vy, heading].");
    m.def(
        "birth_map", [](const Eigen::VectorXd& x, const Eigen::Vector3d& z) { return birth_map(agent(x), z); },
        py::arg("x"), py::arg("z"));

    m.def(
        "loopy_da",
        [](const Eigen::MatrixXd& beta, const Eigen::VectorXd& xi, int max_iterations, double tolerance) {
            DaOptions opt;
            opt.max_iterations = max_iterations;
            opt.tolerance = tolerance;
            const auto out = loopy_da({beta, xi}, opt);
            return py::make_tuple(out.eta, out.varsigma, out.iterations, out.converged);
        },
        py::arg("beta"), py::arg("xi"), py::arg("max_iterations") = 100000, py::arg("tolerance") = 1e-6,
        "Association marginals (eta, varsigma, iterations, converged).");

    m.def(
        "ospa",
        [](const std::vector<Point>& x, const std::vector<Point>& y, double c, double p) { return ospa(x, y, c, p); },
        py::arg("x"), py::arg("y"), py::arg("c") = 5.0, py::arg("p") = 2.0);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_property_readonly("resolved", [](const ExperimentConfig& c) { return c.resolved; })
        .def_property_readonly("output_dir", [](const ExperimentConfig& c) { return resolve_output_dir(c); })
        .def("__str__", [](const ExperimentConfig& c) { return format_config(c); });
    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("load_config", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"));
    m.def("config_defaults", &config_defaults);

    m.def(
        "run",
        [](const ExperimentConfig& cfg, std::optional<std::filesystem::path> out_dir) {
            std::vector<AlgorithmResult> results;
            {
                py::gil_scoped_release release;
                results = run_experiment(cfg);
                if (out_dir) write_results(cfg, results, *out_dir);
            }
            py::list summaries;
            for (const auto& r : results) summaries.append(summary_dict(summarize(r)));
            return summaries;
        },
        py::arg("config"), py::arg("out_dir") = py::none(),
        "Runs every configured algorithm; optionally writes the result files. Returns per-algorithm summaries.");
    m.def(
        "simulate",
        [](const ExperimentConfig& cfg, int run) {
            const Scenario sc = build_scenario(scenario_for_run(cfg, run));
            py::list steps;
            for (const auto& set : generate_all_measurements(sc)) {
                py::list anchors;
                for (const auto& per : set.per_anchor) {
                    Eigen::MatrixXd z(static_cast<Eigen::Index>(per.size()), 4);
                    for (std::size_t i = 0; i < per.size(); ++i) {
                        const auto r = static_cast<Eigen::Index>(i);
                        z.row(r).head<3>() = per[i].z.transpose();
                        z(r, 3) = per[i].origin;
                    }
                    anchors.append(z);
                }
                steps.append(anchors);
            }
            Eigen::MatrixXd traj(static_cast<Eigen::Index>(sc.trajectory.size()), 5);
            for (std::size_t n = 0; n < sc.trajectory.size(); ++n)
                traj.row(static_cast<Eigen::Index>(n)) = sc.trajectory[n].to_vector().transpose();
            return py::make_tuple(traj, steps);
        },
        py::arg("config"), py::arg("run") = 0,
        "Trajectory (N x 5) and per-step, per-anchor measurement arrays with columns z_d, z_aoa, z_aod, origin.");
}
