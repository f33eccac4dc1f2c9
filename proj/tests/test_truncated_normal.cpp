#include <doctest.h>

#include <cmath>
#include <limits>

#include "accum/error.hpp"
#include "accum/rng.hpp"
#include "accum/truncated_normal.hpp"

using namespace accum;
using doctest::Approx;

namespace {

LinearConstraint half_space(std::initializer_list<double> coef, bool strict)
{
    Eigen::VectorXd c(static_cast<Eigen::Index>(coef.size()));
    Eigen::Index i = 0;
    for (double v : coef) {
        c(i++) = v;
    }
    return {c, strict};
}

} // namespace

TEST_CASE("univariate truncated normal stays in bounds")
{
    Rng rng(3);
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 5000; ++i) {
        const double a = sample_truncated_normal(0.0, 1.0, 1.5, inf, rng);
        CHECK(a >= 1.5);
        const double b = sample_truncated_normal(2.0, 0.5, -inf, -3.0, rng);
        CHECK(b <= -3.0);
        const double c = sample_truncated_normal(0.0, 1.0, 0.2, 0.3, rng);
        CHECK(c >= 0.2);
        CHECK(c <= 0.3);
    }
}

TEST_CASE("half-normal mean")
{
    Rng rng(17);
    const ConstraintSet cs{half_space({1.0}, true)};
    const Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
    const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(1, 1);
    const int draws = 200000;
    double s = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto x = sample_truncated_mvn(mean, cov, cs, rng);
        REQUIRE(x(0) < 0.0);
        s += x(0);
    }
    const double expect = -std::sqrt(2.0 / M_PI);
    const double se = std::sqrt((1.0 - 2.0 / M_PI) / draws);
    CHECK(std::abs(s / draws - expect) < 4.0 * se);
}

TEST_CASE("inactive constraints accept almost every proposal")
{
    Rng rng(8);
    const ConstraintSet cs{half_space({0.0, 1.0, 0.0}, true), half_space({0.0, 0.0, 1.0}, false)};
    Eigen::VectorXd mean(3);
    mean << 1.0, -50.0, -50.0;
    const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
    TmvnStats stats;
    for (int i = 0; i < 2000; ++i) {
        sample_truncated_mvn(mean, cov, cs, rng, {}, nullptr, &stats);
    }
    CHECK(static_cast<double>(stats.accepted) / static_cast<double>(stats.proposals) > 0.999);
    CHECK(stats.fallbacks == 0);
}

TEST_CASE("three-dimensional sign constraints always hold")
{
    Rng rng(21);
    const ConstraintSet cs{half_space({0.0, 1.0, 0.0}, true), half_space({0.0, 0.0, 1.0}, false)};
    Eigen::VectorXd mean(3);
    mean << 0.5, -0.2, -0.1;
    Eigen::MatrixXd cov(3, 3);
    cov << 1.0, 0.3, 0.1, 0.3, 1.0, 0.4, 0.1, 0.4, 1.0;
    for (int i = 0; i < 5000; ++i) {
        const auto x = sample_truncated_mvn(mean, cov, cs, rng);
        REQUIRE(x(1) < 0.0);
        REQUIRE(x(2) <= 0.0);
    }
}

TEST_CASE("Gibbs fallback respects constraints in a low-mass region")
{
    Rng rng(4);
    const ConstraintSet cs{half_space({1.0, 0.0}, true), half_space({0.0, 1.0}, false)};
    Eigen::VectorXd mean(2);
    mean << 8.0, 8.0;
    const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
    TmvnStats stats;
    TmvnOptions opts;
    opts.max_rejections = 50;
    for (int i = 0; i < 200; ++i) {
        const auto x = sample_truncated_mvn(mean, cov, cs, rng, opts, nullptr, &stats);
        REQUIRE(satisfies(cs, x));
    }
    CHECK(stats.fallbacks > 0);
}

TEST_CASE("precision and covariance forms agree in law")
{
    Rng a(12, 0);
    Rng b(12, 1);
    const ConstraintSet cs{half_space({0.0, 1.0}, true)};
    Eigen::VectorXd mean(2);
    mean << 0.3, 0.2;
    Eigen::MatrixXd cov(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    const Eigen::MatrixXd prec = cov.inverse();
    const int draws = 100000;
    Eigen::VectorXd sa = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd sb = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < draws; ++i) {
        sa += sample_truncated_mvn(mean, cov, cs, a);
        sb += sample_truncated_mvn_precision(mean, prec, cs, b);
    }
    CHECK(std::abs(sa(0) - sb(0)) / draws < 0.03);
    CHECK(std::abs(sa(1) - sb(1)) / draws < 0.02);
}

TEST_CASE("degenerate covariance is a numerical error")
{
    Rng rng(1);
    const ConstraintSet cs{half_space({1.0, 0.0}, true)};
    const Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(sample_truncated_mvn(mean, cov, cs, rng), NumericalError);
}

TEST_CASE("interior point lies strictly inside")
{
    const ConstraintSet cs{half_space({0.0, 1.0, 0.0}, true), half_space({0.0, 0.0, 1.0}, false),
                           half_space({1.0, 1.0, 1.0}, true)};
    const auto x = interior_point(cs, 3);
    for (const auto& c : cs) {
        CHECK(c.coef.dot(x) < 0.0);
    }
}
