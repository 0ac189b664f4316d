#include "mpslam/association.hpp"

#include <cmath>
#include <limits>

#include "mpslam/errors.hpp"

namespace mpslam {

int exclusion_psi(int a_k, int abar_m, int k, int m) {
    if ((a_k == m && abar_m != k) || (abar_m == k && a_k != m)) return 0;
    return 1;
}

int exclusion_gamma(int abar_m, int rbar_m) { return (rbar_m == 1 && abar_m != 0) ? 0 : 1; }

namespace {

// Messages are capped so that certain associations (zero missed-detection
// weight) stay finite.
constexpr double kMessageCap = 1e200;
constexpr double kTiny = std::numeric_limits<double>::min();

void validate(const AssociationInput& in) {
    const Eigen::Index m = in.xi.size();
    if (in.beta.rows() > 0 && in.beta.cols() != m + 1)
        throw DomainError("loopy_da: beta must have M+1 columns");
    if (!in.beta.allFinite() || !in.xi.allFinite()) throw DomainError("loopy_da: non-finite input");
    if ((in.beta.array() < 0.0).any() || (in.xi.array() < 0.0).any())
        throw DomainError("loopy_da: negative input");
    for (Eigen::Index k = 0; k < in.beta.rows(); ++k)
        if (!(in.beta.row(k).sum() > 0.0)) throw DomainError("loopy_da: beta row with zero sum");
}

void normalize_rows(Eigen::MatrixXd& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        const double s = t.row(r).sum();
        if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("loopy_da: cannot normalize marginals");
        t.row(r) /= s;
    }
}

}  // namespace

AssociationOutput loopy_da(const AssociationInput& in, const DaOptions& options) {
    validate(in);
    const Eigen::Index num_pbo = in.beta.rows();
    const Eigen::Index num_meas = in.xi.size();

    AssociationOutput out;
    out.nu = Eigen::MatrixXd::Ones(num_meas, num_pbo);
    Eigen::MatrixXd zeta = Eigen::MatrixXd::Zero(num_pbo, num_meas);  // PBO k -> measurement m
    Eigen::MatrixXd nu_next(num_meas, num_pbo);

    if (num_pbo > 0 && num_meas > 0) {
        for (int it = 0; it < options.max_iterations; ++it) {
            for (Eigen::Index k = 0; k < num_pbo; ++k) {
                for (Eigen::Index m = 0; m < num_meas; ++m) {
                    double denom = in.beta(k, 0);
                    for (Eigen::Index mm = 0; mm < num_meas; ++mm)
                        if (mm != m) denom += in.beta(k, mm + 1) * out.nu(mm, k);
                    const double v = in.beta(k, m + 1) / std::max(denom, kTiny);
                    zeta(k, m) = std::min(v, kMessageCap);
                }
            }
            double delta = 0.0;
            for (Eigen::Index m = 0; m < num_meas; ++m) {
                for (Eigen::Index k = 0; k < num_pbo; ++k) {
                    double denom = in.xi[m];
                    for (Eigen::Index kk = 0; kk < num_pbo; ++kk)
                        if (kk != k) denom += zeta(kk, m);
                    double v = std::min(1.0 / std::max(denom, kTiny), kMessageCap);
                    v = options.damping * out.nu(m, k) + (1.0 - options.damping) * v;
                    if (!std::isfinite(v)) throw NumericalError("loopy_da: non-finite message");
                    delta = std::max(delta, std::abs(v - out.nu(m, k)));
                    nu_next(m, k) = v;
                }
            }
            out.nu.swap(nu_next);
            out.iterations = it + 1;
            if (delta < options.tolerance) {
                out.converged = true;
                break;
            }
        }
    } else {
        out.converged = true;
    }

    out.eta.resize(num_pbo, num_meas + 1);
    for (Eigen::Index k = 0; k < num_pbo; ++k) {
        out.eta(k, 0) = in.beta(k, 0);
        for (Eigen::Index m = 0; m < num_meas; ++m) out.eta(k, m + 1) = in.beta(k, m + 1) * out.nu(m, k);
    }
    out.varsigma.resize(num_meas, num_pbo + 1);
    for (Eigen::Index m = 0; m < num_meas; ++m) {
        out.varsigma(m, 0) = in.xi[m];
        for (Eigen::Index k = 0; k < num_pbo; ++k) out.varsigma(m, k + 1) = zeta(k, m);
    }
    // A row can be all zero only through underflow (xi = 0 and no PBO claims
    // the measurement); treat it as certainly unexplained.
    for (Eigen::Index m = 0; m < num_meas; ++m)
        if (!(out.varsigma.row(m).sum() > 0.0)) out.varsigma(m, 0) = 1.0;
    normalize_rows(out.eta);
    normalize_rows(out.varsigma);
    return out;
}

}  // namespace mpslam
