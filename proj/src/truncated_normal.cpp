#include "accum/truncated_normal.hpp"

#include <cmath>
#include <limits>

#include "accum/error.hpp"

namespace accum {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal restricted to [a, b] with 0 <= a.
double right_tail(double a, double b, Rng& rng)
{
    if (b - a < 1.0) {
        // Uniform proposal, envelope exp(-a^2 / 2).
        while (true) {
            const double z = a + (b - a) * rng.uniform();
            if (rng.uniform() <= std::exp(0.5 * (a * a - z * z))) {
                return z;
            }
        }
    }
    if (a < 0.5) {
        while (true) {
            const double z = std::abs(rng.normal());
            if (z >= a && z <= b) {
                return z;
            }
        }
    }
    // Robert (1995) translated-exponential proposal.
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    while (true) {
        const double z = a + rng.exponential() / lambda;
        if (z > b) {
            continue;
        }
        if (rng.uniform() <= std::exp(-0.5 * (z - lambda) * (z - lambda))) {
            return z;
        }
    }
}

double standard_truncated(double a, double b, Rng& rng)
{
    if (a >= 0.0) {
        return right_tail(a, b, rng);
    }
    if (b <= 0.0) {
        return -right_tail(-b, -a, rng);
    }
    if (b - a < 2.5) {
        while (true) {
            const double z = a + (b - a) * rng.uniform();
            if (rng.uniform() <= std::exp(-0.5 * z * z)) {
                return z;
            }
        }
    }
    while (true) {
        const double z = rng.normal();
        if (z >= a && z <= b) {
            return z;
        }
    }
}

Eigen::VectorXd gibbs_fallback(const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision,
                               const ConstraintSet& constraints, Rng& rng,
                               const TmvnOptions& opts, Eigen::VectorXd x)
{
    const Eigen::Index d = mean.size();
    for (std::size_t sweep = 0; sweep < std::max<std::size_t>(opts.gibbs_sweeps, 1); ++sweep) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double qjj = precision(j, j);
            double shift = 0.0;
            for (Eigen::Index l = 0; l < d; ++l) {
                if (l != j) {
                    shift += precision(j, l) * (x(l) - mean(l));
                }
            }
            const double m = mean(j) - shift / qjj;
            const double sd = 1.0 / std::sqrt(qjj);
            double lo = -kInf;
            double hi = kInf;
            bool strict_lo = false;
            bool strict_hi = false;
            for (const auto& c : constraints) {
                const double aj = c.coef(j);
                if (aj == 0.0) {
                    continue;
                }
                const double rest = c.coef.dot(x) - aj * x(j);
                const double bound = -rest / aj;
                if (aj > 0.0) {
                    if (bound < hi || (bound == hi && c.strict)) {
                        hi = bound;
                        strict_hi = c.strict;
                    }
                } else if (bound > lo || (bound == lo && c.strict)) {
                    lo = bound;
                    strict_lo = c.strict;
                }
            }
            if (!(lo <= hi)) {
                throw NumericalError("truncated normal Gibbs step has an empty interval");
            }
            double v;
            do {
                v = m + sd * standard_truncated((lo - m) / sd, (hi - m) / sd, rng);
                v = std::min(std::max(v, lo), hi);
            } while ((strict_lo && v == lo) || (strict_hi && v == hi));
            const double previous = x(j);
            x(j) = v;
            if (!satisfies(constraints, x)) {
                // Rounding in the bound arithmetic; keep the feasible value.
                x(j) = previous;
            }
        }
    }
    return x;
}

} // namespace

bool satisfies(const ConstraintSet& constraints, const Eigen::VectorXd& x)
{
    for (const auto& c : constraints) {
        const double v = c.coef.dot(x);
        if (c.strict ? !(v < 0.0) : !(v <= 0.0)) {
            return false;
        }
    }
    return true;
}

double sample_truncated_normal(double mean, double sd, double lower, double upper, Rng& rng)
{
    if (!(sd > 0.0) || !(lower < upper)) {
        throw DomainError("truncated normal needs sd > 0 and lower < upper");
    }
    const double z = standard_truncated((lower - mean) / sd, (upper - mean) / sd, rng);
    return std::min(std::max(mean + sd * z, lower), upper);
}

Eigen::VectorXd interior_point(const ConstraintSet& constraints, Eigen::Index dim)
{
    if (constraints.empty()) {
        return Eigen::VectorXd::Zero(dim);
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(constraints.size()), dim);
    for (std::size_t r = 0; r < constraints.size(); ++r) {
        a.row(static_cast<Eigen::Index>(r)) = constraints[r].coef.transpose();
    }
    const Eigen::VectorXd target = -Eigen::VectorXd::Ones(a.rows());
    Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(target);
    for (const auto& c : constraints) {
        if (!(c.coef.dot(x) < 0.0)) {
            throw NumericalError("could not find an interior point of the constraint set");
        }
    }
    return x;
}

Eigen::VectorXd sample_truncated_mvn_precision(const Eigen::VectorXd& mean,
                                               const Eigen::MatrixXd& precision,
                                               const ConstraintSet& constraints, Rng& rng,
                                               const TmvnOptions& opts,
                                               const Eigen::VectorXd* start, TmvnStats* stats)
{
    const Eigen::Index d = mean.size();
    if (precision.rows() != d || precision.cols() != d) {
        throw DomainError("precision matrix dimension mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("degenerate covariance in truncated normal");
    }
    // x = mean + L^{-T} e has covariance (L L^T)^{-1}.
    const Eigen::MatrixXd upper = llt.matrixU();
    Eigen::VectorXd e(d);
    for (std::size_t r = 0; r < opts.max_rejections; ++r) {
        for (Eigen::Index j = 0; j < d; ++j) {
            e(j) = rng.normal();
        }
        Eigen::VectorXd x = mean + upper.triangularView<Eigen::Upper>().solve(e);
        if (stats) {
            ++stats->proposals;
        }
        if (satisfies(constraints, x)) {
            if (stats) {
                ++stats->accepted;
            }
            return x;
        }
    }
    if (stats) {
        ++stats->fallbacks;
    }
    Eigen::VectorXd x0;
    if (start && start->size() == d && satisfies(constraints, *start)) {
        x0 = *start;
    } else if (satisfies(constraints, mean)) {
        x0 = mean;
    } else {
        x0 = interior_point(constraints, d);
    }
    return gibbs_fallback(mean, precision, constraints, rng, opts, std::move(x0));
}

Eigen::VectorXd sample_truncated_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                     const ConstraintSet& constraints, Rng& rng,
                                     const TmvnOptions& opts, const Eigen::VectorXd* start,
                                     TmvnStats* stats)
{
    const Eigen::Index d = mean.size();
    if (cov.rows() != d || cov.cols() != d) {
        throw DomainError("covariance dimension mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("degenerate covariance in truncated normal");
    }
    const Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(d, d));
    return sample_truncated_mvn_precision(mean, precision, constraints, rng, opts, start, stats);
}

} // namespace accum
