#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "accum/rng.hpp"

namespace accum {

/// Half-space through the origin: coef . x < 0 when strict, coef . x <= 0 otherwise.
struct LinearConstraint {
    Eigen::VectorXd coef;
    bool strict = false;
};

using ConstraintSet = std::vector<LinearConstraint>;

bool satisfies(const ConstraintSet& constraints, const Eigen::VectorXd& x);

/// Draw from N(mean, sd^2) restricted to [lower, upper]; either bound may be infinite.
double sample_truncated_normal(double mean, double sd, double lower, double upper, Rng& rng);

struct TmvnOptions {
    // Rejections from the unconstrained normal before switching to Gibbs.
    std::size_t max_rejections = 1000;
    // Coordinate sweeps performed by the Gibbs fallback.
    std::size_t gibbs_sweeps = 10;
};

struct TmvnStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    std::size_t fallbacks = 0;
};

/// Draw from N(mean, cov) restricted to the constraint set. Rejection sampling
/// from the unconstrained normal is tried first; after opts.max_rejections
/// failures a coordinate-wise Gibbs sampler on univariate truncated normals
/// runs from `start` (or an interior point found by least squares).
Eigen::VectorXd sample_truncated_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                     const ConstraintSet& constraints, Rng& rng,
                                     const TmvnOptions& opts = {},
                                     const Eigen::VectorXd* start = nullptr,
                                     TmvnStats* stats = nullptr);

/// Same law parameterized by the precision matrix (inverse covariance), the
/// form the Gibbs samplers produce directly.
Eigen::VectorXd sample_truncated_mvn_precision(const Eigen::VectorXd& mean,
                                               const Eigen::MatrixXd& precision,
                                               const ConstraintSet& constraints, Rng& rng,
                                               const TmvnOptions& opts = {},
                                               const Eigen::VectorXd* start = nullptr,
                                               TmvnStats* stats = nullptr);

/// A point strictly inside every constraint, or throws NumericalError.
Eigen::VectorXd interior_point(const ConstraintSet& constraints, Eigen::Index dim);

} // namespace accum
