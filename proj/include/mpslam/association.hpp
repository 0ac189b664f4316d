#pragma once

// Probabilistic data association between K legacy PBOs and M measurements
// by iterative message passing on the bipartite association graph.

#include <Eigen/Core>

namespace mpslam {

struct AssociationInput {
    /// K x (M+1); column 0 is the missed-detection weight.
    Eigen::MatrixXd beta;
    /// M weights of "not generated by a legacy PBO" (new PBO or clutter).
    Eigen::VectorXd xi;
};

struct AssociationOutput {
    Eigen::MatrixXd eta;       ///< K x (M+1), rows sum to one
    Eigen::MatrixXd varsigma;  ///< M x (K+1), rows sum to one; column 0 is "no legacy PBO"
    Eigen::MatrixXd nu;        ///< M x K measurement-to-PBO messages at termination
    int iterations = 0;
    bool converged = false;
};

struct DaOptions {
    int max_iterations = 100000;
    double tolerance = 1e-6;
    /// Fraction of the previous message kept at each iteration, in [0, 1).
    double damping = 0.0;
};

/// Exclusion factor between a_k (PBO k's measurement, 0 = none) and ā_m
/// (measurement m's PBO, 0 = none), with 1-based labels k and m.
int exclusion_psi(int a_k, int abar_m, int k, int m);

/// Zero iff a measurement is claimed both by a new PBO and by a legacy PBO.
int exclusion_gamma(int abar_m, int rbar_m);

/// Throws DomainError on invalid input and NumericalError if messages
/// become non-finite.
AssociationOutput loopy_da(const AssociationInput& input, const DaOptions& options = {});

}  // namespace mpslam
