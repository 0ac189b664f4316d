#include "mpslam/filter.hpp"

#include <algorithm>
#include <cmath>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/rng.hpp"

namespace mpslam {

namespace {

constexpr double kMinClutterIntensity = 1e-100;
constexpr Eigen::Index kAgentDim = AgentState::kDim;

GaussianBelief pinned_pa(const Point& pa, double sigma_reg) {
    return {pa, Eigen::Matrix2d::Identity() * sigma_reg * sigma_reg};
}

GaussianBelief stack(const GaussianBelief& agent, const GaussianBelief& pbo) {
    const Eigen::Index n = agent.dim() + pbo.dim();
    Eigen::VectorXd mean(n);
    mean << agent.mean, pbo.mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    cov.topLeftCorner(agent.dim(), agent.dim()) = agent.cov;
    cov.bottomRightCorner(pbo.dim(), pbo.dim()) = pbo.cov;
    return {std::move(mean), std::move(cov)};
}

// Unwraps the angle components of h onto the branch of `center`, keeping
// sigma-point averages meaningful near +-pi.
Eigen::Vector3d unwrap_to(const Eigen::Vector3d& h, const Eigen::Vector3d& center) {
    return {h[0], center[1] + wrap_angle(h[1] - center[1]), center[2] + wrap_angle(h[2] - center[2])};
}

}  // namespace

void FilterConfig::validate() const {
    detection.validate();
    noise.validate();
    if (!(p_declare > 0.0 && p_declare < 1.0)) throw DomainError("p_de must lie in (0, 1)");
    if (!(p_prune >= 0.0 && p_prune < p_declare)) throw DomainError("p_pr must satisfy 0 <= p_pr < p_de");
    if (importance_samples < 1) throw DomainError("the number of importance samples must be at least 1");
    if (birth.mean_count < 0.0) throw DomainError("mu_n must be nonnegative");
    if (!(birth.radius > 0.0)) throw DomainError("d_max must be positive");
    if (clutter.mean_count < 0.0) throw DomainError("mu_fa must be nonnegative");
    if (!(clutter.max_range > 0.0)) throw DomainError("clutter range must be positive");
    if (da.max_iterations < 1) throw DomainError("N_DA must be at least 1");
    if (!(da.tolerance > 0.0)) throw DomainError("DA tolerance must be positive");
    if (!(da.damping >= 0.0 && da.damping < 1.0)) throw DomainError("DA damping must lie in [0, 1)");
    if (sigma_reg < 0.0 || va_drift_std < 0.0) throw DomainError("regularization stds must be nonnegative");
    if (pa_positions.empty()) throw DomainError("at least one physical anchor is required");
}

double clutter_intensity(const FilterConfig& cfg) {
    return std::max(cfg.clutter.intensity(), kMinClutterIntensity);
}

FilterState initialize(const GaussianBelief& agent_prior, const FilterConfig& cfg) {
    if (agent_prior.dim() != kAgentDim) throw ShapeError("initialize: agent prior must be 5-dimensional");
    FilterState s;
    s.agent = agent_prior;
    s.pbos.resize(cfg.pa_positions.size());
    for (std::size_t j = 0; j < cfg.pa_positions.size(); ++j) {
        PboHypothesis pa;
        pa.belief = pinned_pa(cfg.pa_positions[j], cfg.sigma_reg);
        pa.existence = 1.0;
        pa.anchor = static_cast<int>(j);
        pa.label = 0;
        pa.is_pa = true;
        s.pbos[j].push_back(std::move(pa));
    }
    return s;
}

FilterState predict(const FilterState& state, const FilterConfig& cfg) {
    FilterState out;
    out.agent = kf_predict(state.agent, cfg.motion.transition, cfg.motion.process_noise);
    out.step = state.step;
    out.next_label = state.next_label;
    out.pbos.resize(state.pbos.size());
    const Eigen::MatrixXd drift = Eigen::Matrix2d::Identity() * cfg.va_drift_std * cfg.va_drift_std;
    for (std::size_t j = 0; j < state.pbos.size(); ++j) {
        for (const auto& pbo : state.pbos[j]) {
            if (pbo.is_pa) {
                PboHypothesis pa = pbo;
                pa.belief = pinned_pa(cfg.pa_positions[j], cfg.sigma_reg);
                pa.existence = 1.0;
                out.pbos[j].push_back(std::move(pa));
            } else {
                out.pbos[j].push_back(survival_transition(pbo, cfg.detection.p_survive, drift));
            }
        }
    }
    return out;
}

LegacyEvaluation evaluate_legacy(const GaussianBelief& agent, const PboHypothesis& pbo,
                                 std::span<const Measurement> measurements, const Point& pa,
                                 const FilterConfig& cfg) {
    GaussianBelief joint = stack(agent, pbo.belief);
    const bool reflected = !pbo.is_pa;
    const auto h = [&](const Eigen::VectorXd& s) -> Eigen::Vector3d {
        return predict_measurement(s.head<2>(), s[4], s.segment<2>(kAgentDim), pa, reflected);
    };
    const Eigen::Vector3d center = h(joint.mean);
    const SigmaPointSet sp = sigma_points(joint, cfg.ut);
    const UtResult ut = unscented_transform(sp, joint.mean, [&](const auto& s) -> Eigen::VectorXd {
        return unwrap_to(h(s), center);
    });
    InnovationUpdate upd(joint, cfg.noise.covariance(), ut, kMeasurementAngles);

    const Eigen::Index m_count = static_cast<Eigen::Index>(measurements.size());
    const double r = pbo.existence;
    const double p_d = cfg.detection.p_detect;
    const double lambda_fa = clutter_intensity(cfg);
    Eigen::VectorXd evidence(m_count);
    Eigen::VectorXd beta(m_count + 1);
    beta[0] = r * (1.0 - p_d) + (1.0 - r);
    for (Eigen::Index m = 0; m < m_count; ++m) {
        evidence[m] = upd.evidence(measurements[static_cast<std::size_t>(m)].z);
        beta[m + 1] = r * p_d * evidence[m] / lambda_fa;
    }
    // Every hypothesis underflowed; the PBO is treated as missed.
    if (!(beta.sum() > 0.0)) beta[0] = 1.0;
    return {std::move(joint), std::move(upd), std::move(evidence), std::move(beta)};
}

namespace {

struct BirthProposal {
    GaussianBelief belief;
};

// Birth points from every (agent sigma point, measurement sigma point) pair.
// Mean weights are products; the covariance uses the product mean weights
// plus the usual centre correction so the result is exact for affine maps.
GaussianBelief birth_proposal(const SigmaPointSet& agent_sp, const Eigen::Vector3d& z, const FilterConfig& cfg) {
    const GaussianBelief zb(z, cfg.noise.covariance());
    const SigmaPointSet meas_sp = sigma_points(zb, cfg.ut);
    const Eigen::Index ni = agent_sp.size();
    const Eigen::Index nl = meas_sp.size();
    Eigen::MatrixXd pts(2, ni * nl);
    Eigen::VectorXd w(ni * nl);
    for (Eigen::Index i = 0; i < ni; ++i) {
        const auto x = agent_sp.points.col(i);
        for (Eigen::Index l = 0; l < nl; ++l) {
            const auto zl = meas_sp.points.col(l);
            pts.col(i * nl + l) = birth_point(x.head<2>(), x[4], zl[0], zl[1]);
            w[i * nl + l] = agent_sp.mean_weights[i] * meas_sp.mean_weights[l];
        }
    }
    const Eigen::Vector2d mean = pts * w;
    const Eigen::MatrixXd d = pts.colwise() - mean;
    Eigen::MatrixXd cov = d * w.asDiagonal() * d.transpose();
    const double centre_correction = 1.0 - cfg.ut.alpha * cfg.ut.alpha + cfg.ut.beta;
    cov += centre_correction * d.col(0) * d.col(0).transpose();
    repair_psd(cov);
    return {mean, cov};
}

NewEvaluation evaluate_new_with(const GaussianBelief& agent, const SigmaPointSet& agent_sp,
                                const Eigen::Vector3d& z, const Point& pa, const FilterConfig& cfg,
                                std::uint64_t stream) {
    NewEvaluation out;
    out.proposal = birth_proposal(agent_sp, z, cfg);
    if (cfg.birth.mean_count <= 0.0) return out;

    const Eigen::Matrix3d meas_cov = cfg.noise.covariance();
    const Eigen::MatrixXd l = psd_cholesky(out.proposal.cov);
    const double f_uniform = cfg.birth.density();
    Rng rng(stream);
    double sum = 0.0;
    bool any_inside = false;
    for (int p = 0; p < cfg.importance_samples; ++p) {
        const Eigen::Vector2d n(rng.normal(), rng.normal());
        const Eigen::Vector2d psi = out.proposal.mean + l * n;
        if ((psi - pa).norm() > cfg.birth.radius) continue;
        any_inside = true;
        const double weight = f_uniform / std::exp(log_gaussian_density(psi - out.proposal.mean, out.proposal.cov));
        const Eigen::Vector3d center = predict_measurement(agent.mean.head<2>(), agent.mean[4], psi, pa, true);
        const UtResult ut = unscented_transform(agent_sp, agent.mean, [&](const auto& x) -> Eigen::VectorXd {
            return unwrap_to(predict_measurement(x.template head<2>(), x[4], psi, pa, true), center);
        });
        Eigen::Vector3d innov = z - ut.mean;
        innov[1] = wrap_angle(innov[1]);
        innov[2] = wrap_angle(innov[2]);
        sum += weight * std::exp(log_gaussian_density(innov, ut.cov + meas_cov));
    }
    if (!any_inside) {
        out.degenerate = true;
        return out;
    }
    const double integral = sum / static_cast<double>(cfg.importance_samples);
    out.xi = 1.0 + cfg.birth.mean_count * integral / clutter_intensity(cfg);
    return out;
}

std::uint64_t birth_stream(const FilterConfig& cfg, int step, int anchor, std::size_t m) {
    return derive_seed({cfg.seed, 0xB1B1ULL, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(anchor),
                        static_cast<std::uint64_t>(m)});
}

// Conditions the birth proposal on the AOD component of z with the agent at
// `agent_mean`; range and AOA already shaped the proposal.
GaussianBelief refine_birth(const GaussianBelief& proposal, const Eigen::Vector3d& z, const Point& pa,
                            const Eigen::VectorXd& agent_mean, const FilterConfig& cfg) {
    const Point p = agent_mean.head<2>();
    const double heading = agent_mean[4];
    const double center = predict_measurement(p, heading, proposal.mean, pa, true)[2];
    const UtResult ut = unscented_transform(proposal, [&](const Eigen::VectorXd& psi) -> Eigen::VectorXd {
        const double aod = predict_measurement(p, heading, psi, pa, true)[2];
        return Eigen::VectorXd::Constant(1, center + wrap_angle(aod - center));
    }, cfg.ut);
    const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(1, 1, cfg.noise.sigma_aod * cfg.noise.sigma_aod);
    const InnovationUpdate upd(proposal, r, ut, 0b1);
    return {upd.posterior_mean(Eigen::VectorXd::Constant(1, z[2])), upd.posterior_cov()};
}

}  // namespace

NewEvaluation evaluate_new(const GaussianBelief& agent, const Eigen::Vector3d& z, const Point& pa,
                           const FilterConfig& cfg, std::uint64_t stream) {
    return evaluate_new_with(agent, sigma_points(agent, cfg.ut), z, pa, cfg, stream);
}

AnchorEvaluation evaluate_anchor(const GaussianBelief& agent, std::span<const PboHypothesis> pbos,
                                 std::span<const Measurement> measurements, const Point& pa,
                                 const FilterConfig& cfg, int step, int anchor) {
    AnchorEvaluation ev;
    const auto k_count = static_cast<Eigen::Index>(pbos.size());
    const auto m_count = static_cast<Eigen::Index>(measurements.size());
    AssociationInput in;
    in.beta.resize(k_count, m_count + 1);
    in.xi.resize(m_count);
    ev.legacy.reserve(pbos.size());
    for (Eigen::Index k = 0; k < k_count; ++k) {
        ev.legacy.push_back(evaluate_legacy(agent, pbos[static_cast<std::size_t>(k)], measurements, pa, cfg));
        in.beta.row(k) = ev.legacy.back().beta.transpose();
    }
    if (m_count > 0) {
        const SigmaPointSet agent_sp = sigma_points(agent, cfg.ut);
        for (Eigen::Index m = 0; m < m_count; ++m) {
            const auto mi = static_cast<std::size_t>(m);
            ev.fresh.push_back(
                evaluate_new_with(agent, agent_sp, measurements[mi].z, pa, cfg, birth_stream(cfg, step, anchor, mi)));
            in.xi[m] = ev.fresh.back().xi;
        }
    }
    ev.association = loopy_da(in, cfg.da);
    return ev;
}

GaussianBelief matched_agent_belief(const GaussianBelief& agent, const LegacyEvaluation& eval,
                                    std::span<const Measurement> measurements, const Eigen::MatrixXd& eta,
                                    Eigen::Index row) {
    std::vector<WeightedGaussian> comps;
    comps.reserve(measurements.size() + 1);
    comps.push_back({eta(row, 0), agent});
    const Eigen::MatrixXd post_cov = eval.update.posterior_cov().topLeftCorner(kAgentDim, kAgentDim);
    for (std::size_t m = 0; m < measurements.size(); ++m) {
        const double w = eta(row, static_cast<Eigen::Index>(m) + 1);
        if (w <= 0.0) continue;
        comps.push_back({w, GaussianBelief(eval.update.posterior_mean(measurements[m].z).head(kAgentDim), post_cov)});
    }
    return moment_match(comps);
}

GaussianBelief fuse_agent(const GaussianBelief& agent, std::span<const GaussianBelief> matched, FusionRule rule) {
    if (matched.empty()) return agent;
    if (rule == FusionRule::kProduct) return gaussian_product(matched);

    const Eigen::Index n = agent.dim();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> prior_llt(agent.cov);
    if (prior_llt.info() != Eigen::Success) throw FactorizationError("fuse_agent: singular predicted covariance");
    const Eigen::MatrixXd prior_info = prior_llt.solve(eye);
    Eigen::MatrixXd total = prior_info;
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(n);
    for (const auto& g : matched) {
        Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
        if (llt.info() != Eigen::Success) throw FactorizationError("fuse_agent: singular matched covariance");
        const Eigen::MatrixXd info = llt.solve(eye);
        Eigen::MatrixXd message = info - prior_info;
        symmetrize(message);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(message);
        if (eig.eigenvalues().minCoeff() < 0.0)
            message = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                      eig.eigenvectors().transpose();
        total += message;
        Eigen::VectorXd d = g.mean - agent.mean;
        shift += info * d;
    }
    symmetrize(total);
    Eigen::LLT<Eigen::MatrixXd> total_llt(total);
    if (total_llt.info() != Eigen::Success) throw FactorizationError("fuse_agent: singular fused precision");
    Eigen::MatrixXd cov = total_llt.solve(eye);
    symmetrize(cov);
    return {agent.mean + total_llt.solve(shift), std::move(cov)};
}

std::vector<PboHypothesis> update_pbos(std::span<const PboHypothesis> pbos, const AnchorEvaluation& eval,
                                       std::span<const Measurement> measurements, const Point& pa,
                                       const Eigen::VectorXd& agent_mean, const FilterConfig& cfg,
                                       int& next_label, StepDiagnostics* diagnostics) {
    const Eigen::MatrixXd& eta = eval.association.eta;
    const Eigen::MatrixXd& varsigma = eval.association.varsigma;
    const double p_d = cfg.detection.p_detect;
    std::vector<PboHypothesis> out;
    out.reserve(pbos.size() + measurements.size());

    for (std::size_t k = 0; k < pbos.size(); ++k) {
        const PboHypothesis& pbo = pbos[k];
        if (pbo.is_pa) {
            out.push_back(pbo);
            continue;
        }
        const auto row = static_cast<Eigen::Index>(k);
        const LegacyEvaluation& le = eval.legacy[k];
        const double r = pbo.existence;
        const double beta0 = le.beta[0];
        // Split the missed-detection weight into its existing part.
        const double w_missed = beta0 > 0.0 ? eta(row, 0) * r * (1.0 - p_d) / beta0 : 0.0;
        std::vector<WeightedGaussian> comps;
        comps.push_back({w_missed, pbo.belief});
        double existence = w_missed;
        const Eigen::MatrixXd post_cov = le.update.posterior_cov().bottomRightCorner(2, 2);
        for (std::size_t m = 0; m < measurements.size(); ++m) {
            const double w = eta(row, static_cast<Eigen::Index>(m) + 1);
            if (w <= 0.0) continue;
            existence += w;
            comps.push_back({w, GaussianBelief(le.update.posterior_mean(measurements[m].z).tail(2), post_cov)});
        }
        existence = std::clamp(existence, 0.0, 1.0);
        if (existence < cfg.p_prune) {
            if (diagnostics) ++diagnostics->pruned;
            continue;
        }
        PboHypothesis next = pbo;
        next.existence = existence;
        next.belief = moment_match(comps);
        out.push_back(std::move(next));
    }

    for (std::size_t m = 0; m < measurements.size(); ++m) {
        const NewEvaluation& ne = eval.fresh[m];
        if (!(ne.xi > 1.0)) continue;
        const double existence =
            std::clamp(varsigma(static_cast<Eigen::Index>(m), 0) * (ne.xi - 1.0) / ne.xi, 0.0, 1.0);
        if (existence < cfg.p_prune) continue;
        PboHypothesis fresh;
        fresh.belief = refine_birth(ne.proposal, measurements[m].z, pa, agent_mean, cfg);
        fresh.existence = existence;
        fresh.anchor = pbos.empty() ? 0 : pbos.front().anchor;
        fresh.label = next_label++;
        out.push_back(std::move(fresh));
        if (diagnostics) ++diagnostics->new_pbos;
    }
    return out;
}

FilterState update(const FilterState& predicted, const MeasurementSet& measurements, const FilterConfig& cfg,
                   StepDiagnostics* diagnostics) {
    const std::size_t anchors = predicted.pbos.size();
    std::vector<AnchorEvaluation> evals;
    evals.reserve(anchors);
    std::vector<GaussianBelief> matched;
    const auto meas_for = [&](std::size_t j) -> std::span<const Measurement> {
        if (j < measurements.per_anchor.size()) return measurements.per_anchor[j];
        return {};
    };

    for (std::size_t j = 0; j < anchors; ++j) {
        const auto meas = meas_for(j);
        evals.push_back(evaluate_anchor(predicted.agent, predicted.pbos[j], meas, cfg.pa_positions[j], cfg,
                                        predicted.step, static_cast<int>(j)));
        const AnchorEvaluation& ev = evals.back();
        for (std::size_t k = 0; k < predicted.pbos[j].size(); ++k)
            matched.push_back(matched_agent_belief(predicted.agent, ev.legacy[k], meas, ev.association.eta,
                                                   static_cast<Eigen::Index>(k)));
        if (diagnostics) {
            diagnostics->legacy_pbos += static_cast<int>(predicted.pbos[j].size());
            diagnostics->da_iterations = std::max(diagnostics->da_iterations, ev.association.iterations);
            diagnostics->da_converged = diagnostics->da_converged && ev.association.converged;
            for (const auto& f : ev.fresh) diagnostics->degenerate_births += f.degenerate ? 1 : 0;
        }
    }

    FilterState out;
    out.agent = fuse_agent(predicted.agent, matched, cfg.fusion);
    if (!out.agent.mean.allFinite() || !out.agent.cov.allFinite())
        throw NumericalError("update: non-finite agent belief");
    out.agent.mean[4] = wrap_angle(out.agent.mean[4]);
    out.step = predicted.step + 1;
    out.next_label = predicted.next_label;
    out.pbos.resize(anchors);
    for (std::size_t j = 0; j < anchors; ++j)
        out.pbos[j] = update_pbos(predicted.pbos[j], evals[j], meas_for(j), cfg.pa_positions[j], out.agent.mean, cfg,
                                  out.next_label, diagnostics);
    return out;
}

FilterState step(const FilterState& state, const MeasurementSet& measurements, const FilterConfig& cfg,
                 StepDiagnostics* diagnostics) {
    if (state.step == 0) return update(state, measurements, cfg, diagnostics);
    return update(predict(state, cfg), measurements, cfg, diagnostics);
}

Estimate estimate(const FilterState& state, const FilterConfig& cfg) {
    Estimate e;
    e.agent = AgentState::from_vector(state.agent.mean);
    for (const auto& anchor : state.pbos)
        for (const auto& pbo : anchor)
            if (pbo.existence > cfg.p_declare)
                e.map.push_back({pbo.belief.mean, pbo.existence, pbo.anchor, pbo.label, pbo.is_pa});
    return e;
}

}  // namespace mpslam
