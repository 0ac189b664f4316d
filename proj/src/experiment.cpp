#include "mpslam/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mpslam/baseline.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/rng.hpp"

namespace mpslam {

namespace {

constexpr std::uint64_t kFilterStream = 0x46494C54ULL;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<Point> declared_vas(const Estimate& e) {
    std::vector<Point> out;
    for (const auto& m : e.map)
        if (!m.is_pa) out.push_back(m.position);
    return out;
}

void append_trace(std::ostringstream& os, int n, const GaussianBelief& agent,
                  const std::vector<std::vector<PboHypothesis>>& pbos) {
    os << n << ",agent,-1,-1,1";
    for (Eigen::Index i = 0; i < agent.dim(); ++i) os << "," << fmt(agent.mean[i]);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index k = 0; k < 2; ++k) os << "," << fmt(agent.cov(i, k));
    os << "\n";
    for (const auto& anchor : pbos)
        for (const auto& p : anchor)
            os << n << "," << (p.is_pa ? "pa" : "pbo") << "," << p.anchor << "," << p.label << ","
               << fmt(p.existence) << "," << fmt(p.belief.mean[0]) << "," << fmt(p.belief.mean[1]) << ",,,,"
               << fmt(p.belief.cov(0, 0)) << "," << fmt(p.belief.cov(0, 1)) << "," << fmt(p.belief.cov(1, 0)) << ","
               << fmt(p.belief.cov(1, 1)) << "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << content;
}

}  // namespace

std::string algorithm_name(int particles) { return particles == 0 ? "sp" : "pf" + std::to_string(particles); }

RunOutput run_realization(const ExperimentConfig& cfg, int r, int particles, bool trace) {
    const Scenario sc = build_scenario(scenario_for_run(cfg, r));
    const std::vector<MeasurementSet> meas = generate_all_measurements(sc);
    FilterConfig fcfg = cfg.filter;
    fcfg.seed = derive_seed({sc.seed, kFilterStream});
    const GaussianBelief prior = draw_initial_prior(sc.trajectory.front(), cfg.prior, sc.seed);

    RunOutput out;
    out.record.seed = sc.seed;
    std::vector<Point> all_vas;
    for (const auto& anchor : sc.vas)
        for (const auto& va : anchor)
            if (va.order > 0) all_vas.push_back(va.position);
    std::ostringstream trace_os;
    if (trace) trace_os << "step,kind,anchor,label,existence,m0,m1,m2,m3,m4,c00,c01,c10,c11\n";

    try {
        FilterState sp;
        ParticleFilterState pf;
        if (particles == 0) {
            sp = initialize(prior, fcfg);
        } else {
            pf = particle_initialize(prior, particles, fcfg);
        }
        for (int n = 0; n < static_cast<int>(sc.trajectory.size()); ++n) {
            const auto t0 = std::chrono::steady_clock::now();
            Estimate e;
            if (particles == 0) {
                sp = step(sp, meas[static_cast<std::size_t>(n)], fcfg);
                e = estimate(sp, fcfg);
            } else {
                pf = particle_step(pf, meas[static_cast<std::size_t>(n)], fcfg);
                e = particle_estimate(pf, fcfg);
            }
            const auto t1 = std::chrono::steady_clock::now();

            StepRecord s;
            s.truth = sc.trajectory[static_cast<std::size_t>(n)];
            s.estimate = e.agent;
            s.map = declared_vas(e);
            s.all_vas = all_vas;
            for (std::size_t j = 0; j < sc.vas.size(); ++j)
                for (const auto& va : visible_vas(sc, n, static_cast<int>(j)))
                    if (va.order > 0) s.visible_vas.push_back(va.position);
            s.los = visibility(s.truth, sc.vas.front().front(), sc.env);
            s.seconds = std::chrono::duration<double>(t1 - t0).count();
            out.record.steps.push_back(std::move(s));
            if (trace) {
                if (particles == 0) {
                    append_trace(trace_os, n, sp.agent, sp.pbos);
                } else {
                    append_trace(trace_os, n, pf.cloud.gaussian(), pf.pbos);
                }
            }
        }
    } catch (const Error& ex) {
        out.record.failed = true;
        out.record.failure = ex.what();
    }
    out.record.lost = is_lost(out.record);
    out.trace_csv = trace_os.str();
    return out;
}

std::vector<AlgorithmResult> run_experiment(const ExperimentConfig& cfg) {
    std::vector<AlgorithmResult> results;
    if (cfg.filter_enabled) results.push_back({algorithm_name(0), 0, {}});
    for (int n : cfg.particles) results.push_back({algorithm_name(n), n, {}});

    struct Task {
        std::size_t alg;
        int run;
    };
    std::vector<Task> tasks;
    for (std::size_t a = 0; a < results.size(); ++a) {
        const int runs = results[a].particles > 0 && cfg.baseline_runs > 0 ? cfg.baseline_runs : cfg.mc.runs;
        results[a].runs.resize(static_cast<std::size_t>(runs));
        for (int r = 0; r < runs; ++r) tasks.push_back({a, r});
    }
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const Task& t = tasks[i];
            results[t.alg].runs[static_cast<std::size_t>(t.run)] =
                run_realization(cfg, t.run, results[t.alg].particles, cfg.output.trace);
        }
    };
    const int threads = std::max(1, std::min<int>(cfg.mc.threads, static_cast<int>(tasks.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

AlgorithmSummary summarize(const AlgorithmResult& result) {
    AlgorithmSummary s;
    s.name = result.name;
    std::vector<RunRecord> records;
    records.reserve(result.runs.size());
    for (const auto& r : result.runs) records.push_back(r.record);
    s.runs = static_cast<int>(records.size());
    double seconds = 0.0;
    long steps = 0;
    int below = 0;
    for (const auto& r : records) {
        s.failed += r.failed ? 1 : 0;
        s.lost += r.lost ? 1 : 0;
        for (const auto& st : r.steps) seconds += st.seconds;
        steps += static_cast<long>(r.steps.size());
        if (!r.failed && !r.steps.empty() && r.steps.back().position_error() < 0.1) ++below;
    }
    s.lost_rate = s.runs ? static_cast<double>(s.lost) / s.runs : 0.0;
    s.mean_step_seconds = steps ? seconds / static_cast<double>(steps) : 0.0;
    s.final_error_below_10cm = s.runs ? static_cast<double>(below) / s.runs : 0.0;
    if (s.lost == s.runs) return s;

    s.rmse = rmse(records);
    s.ospa_all = mean_ospa(records, MapTruth::kAll);
    s.ospa_visible = mean_ospa(records, MapTruth::kVisible);
    s.cardinality_all = mean_cardinality_error(records, MapTruth::kAll);
    s.cardinality_visible = mean_cardinality_error(records, MapTruth::kVisible);

    const std::size_t n_steps = s.ospa_all.size();
    const std::size_t tail = std::min<std::size_t>(20, n_steps);
    double ospa_sum = 0.0;
    for (std::size_t n = n_steps - tail; n < n_steps; ++n) ospa_sum += s.ospa_all[n];
    s.mean_ospa_last20 = tail ? ospa_sum / static_cast<double>(tail) : 0.0;
    double detected = 0.0;
    int used = 0;
    for (const auto& r : records) {
        if (r.lost) continue;
        for (std::size_t n = n_steps - tail; n < n_steps; ++n)
            detected += matched_count(r.steps[n].map, r.steps[n].all_vas, 1.0);
        ++used;
    }
    s.mean_detected_last20 = used && tail ? detected / (static_cast<double>(used) * static_cast<double>(tail)) : 0.0;

    const RunRecord* reference = nullptr;
    for (const auto& r : records)
        if (!r.lost) {
            reference = &r;
            break;
        }
    std::vector<double> olos;
    for (std::size_t n = 0; reference && n < reference->steps.size(); ++n)
        if (!reference->steps[n].los) olos.push_back(s.rmse.values[n]);
    if (!olos.empty()) {
        std::sort(olos.begin(), olos.end());
        const std::size_t h = olos.size() / 2;
        s.olos_rmse_median = olos.size() % 2 ? olos[h] : 0.5 * (olos[h - 1] + olos[h]);
    }
    return s;
}

void write_results(const ExperimentConfig& cfg, const std::vector<AlgorithmResult>& results,
                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<AlgorithmSummary> summaries;
    for (const auto& r : results) summaries.push_back(summarize(r));

    if (cfg.output.csv) {
        std::ostringstream rmse_os, ospa_os, card_os, ecdf_os, runs_os, time_os;
        rmse_os << "algorithm,step,rmse,runs_used,runs_excluded\n";
        ospa_os << "algorithm,step,ospa_all,ospa_visible\n";
        card_os << "algorithm,step,cardinality_all,cardinality_visible\n";
        ecdf_os << "algorithm,error,fraction\n";
        runs_os << "algorithm,run,seed,failed,lost,final_error\n";
        time_os << "algorithm,run,steps,mean_step_seconds\n";
        for (std::size_t a = 0; a < results.size(); ++a) {
            const auto& res = results[a];
            const auto& s = summaries[a];
            for (std::size_t n = 0; n < s.rmse.values.size(); ++n)
                rmse_os << s.name << "," << n << "," << fmt(s.rmse.values[n]) << "," << s.rmse.runs_used << ","
                        << s.rmse.runs_excluded << "\n";
            for (std::size_t n = 0; n < s.ospa_all.size(); ++n) {
                ospa_os << s.name << "," << n << "," << fmt(s.ospa_all[n]) << "," << fmt(s.ospa_visible[n]) << "\n";
                card_os << s.name << "," << n << "," << fmt(s.cardinality_all[n]) << ","
                        << fmt(s.cardinality_visible[n]) << "\n";
            }
            std::vector<double> errors;
            for (const auto& run : res.runs)
                if (!run.record.lost)
                    for (const auto& st : run.record.steps) errors.push_back(st.position_error());
            if (!errors.empty()) {
                const Ecdf cdf = ecdf(errors);
                const auto& sorted = cdf.sorted();
                for (std::size_t i = 0; i < sorted.size(); ++i)
                    if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i])
                        ecdf_os << s.name << "," << fmt(sorted[i]) << "," << fmt(cdf(sorted[i])) << "\n";
            }
            for (std::size_t r = 0; r < res.runs.size(); ++r) {
                const RunRecord& rec = res.runs[r].record;
                const double final_error = rec.steps.empty() ? -1.0 : rec.steps.back().position_error();
                runs_os << s.name << "," << r << "," << rec.seed << "," << rec.failed << "," << rec.lost << ","
                        << fmt(final_error) << "\n";
                double secs = 0.0;
                for (const auto& st : rec.steps) secs += st.seconds;
                time_os << s.name << "," << r << "," << rec.steps.size() << ","
                        << fmt(rec.steps.empty() ? 0.0 : secs / static_cast<double>(rec.steps.size())) << "\n";
            }
            if (cfg.output.per_run) {
                const auto run_dir = dir / "runs" / s.name;
                std::filesystem::create_directories(run_dir);
                for (std::size_t r = 0; r < res.runs.size(); ++r) {
                    std::ostringstream os;
                    os << "step,true_px,true_py,true_vx,true_vy,true_heading,est_px,est_py,est_vx,est_vy,"
                          "est_heading,error,los,n_map,n_visible,ospa_all,ospa_visible\n";
                    const RunRecord& rec = res.runs[r].record;
                    for (std::size_t n = 0; n < rec.steps.size(); ++n) {
                        const StepRecord& st = rec.steps[n];
                        os << n;
                        for (const AgentState* x : {&st.truth, &st.estimate})
                            os << "," << fmt(x->position.x()) << "," << fmt(x->position.y()) << ","
                               << fmt(x->velocity.x()) << "," << fmt(x->velocity.y()) << "," << fmt(x->heading);
                        os << "," << fmt(st.position_error()) << "," << st.los << "," << st.map.size() << ","
                           << st.visible_vas.size() << "," << fmt(ospa(st.map, st.all_vas)) << ","
                           << fmt(ospa(st.map, st.visible_vas)) << "\n";
                    }
                    write_file(run_dir / ("run_" + std::to_string(r) + ".csv"), os.str());
                    if (cfg.output.trace)
                        write_file(run_dir / ("trace_" + std::to_string(r) + ".csv"), res.runs[r].trace_csv);
                }
            }
        }
        write_file(dir / "rmse.csv", rmse_os.str());
        write_file(dir / "ospa.csv", ospa_os.str());
        write_file(dir / "cardinality.csv", card_os.str());
        write_file(dir / "ecdf.csv", ecdf_os.str());
        write_file(dir / "runs.csv", runs_os.str());
        write_file(dir / "runtime.csv", time_os.str());
    }

    if (cfg.output.json) {
        nlohmann::ordered_json j;
        j["schema_version"] = kSummarySchemaVersion;
        j["config"] = cfg.resolved;
        nlohmann::ordered_json algs = nlohmann::ordered_json::object();
        for (const auto& s : summaries) {
            nlohmann::ordered_json a;
            a["runs"] = s.runs;
            a["failed"] = s.failed;
            a["lost"] = s.lost;
            a["lost_rate"] = s.lost_rate;
            a["mean_step_seconds"] = s.mean_step_seconds;
            a["final_error_below_0.1m"] = s.final_error_below_10cm;
            a["mean_ospa_last20"] = s.mean_ospa_last20;
            a["mean_detected_vas_last20"] = s.mean_detected_last20;
            a["olos_rmse_median"] = s.olos_rmse_median ? nlohmann::ordered_json(*s.olos_rmse_median) : nullptr;
            a["rmse"] = s.rmse.values;
            a["ospa_all"] = s.ospa_all;
            a["cardinality_all"] = s.cardinality_all;
            algs[s.name] = std::move(a);
        }
        j["algorithms"] = std::move(algs);
        nlohmann::ordered_json ratios = nlohmann::ordered_json::object();
        const auto sp = std::find_if(summaries.begin(), summaries.end(), [](const auto& s) { return s.name == "sp"; });
        if (sp != summaries.end() && sp->mean_step_seconds > 0.0)
            for (const auto& s : summaries)
                if (s.name != "sp") ratios[s.name + "_over_sp"] = s.mean_step_seconds / sp->mean_step_seconds;
        j["runtime_ratios"] = std::move(ratios);
        write_file(dir / "summary.json", j.dump(2) + "\n");
    }
}

void write_simulation(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream meas_os, traj_os;
    meas_os << "run,";
    traj_os << "run,step,px,py,vx,vy,heading,los\n";
    for (int r = 0; r < cfg.mc.runs; ++r) {
        const Scenario sc = build_scenario(scenario_for_run(cfg, r));
        std::ostringstream os;
        write_measurements_csv(os, generate_all_measurements(sc));
        std::istringstream lines(os.str());
        std::string line;
        bool header = true;
        while (std::getline(lines, line)) {
            if (header) {
                if (r == 0) meas_os << line << "\n";
                header = false;
                continue;
            }
            meas_os << r << "," << line << "\n";
        }
        for (std::size_t n = 0; n < sc.trajectory.size(); ++n) {
            const AgentState& x = sc.trajectory[n];
            traj_os << r << "," << n << "," << fmt(x.position.x()) << "," << fmt(x.position.y()) << ","
                    << fmt(x.velocity.x()) << "," << fmt(x.velocity.y()) << "," << fmt(x.heading) << ","
                    << visibility(x, sc.vas.front().front(), sc.env) << "\n";
        }
    }
    write_file(dir / "measurements.csv", meas_os.str());
    write_file(dir / "trajectory.csv", traj_os.str());
}

}  // namespace mpslam
