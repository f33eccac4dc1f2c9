#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "accum/error.hpp"
#include "accum/inference.hpp"
#include "accum/simulators.hpp"

using namespace accum;
using doctest::Approx;

namespace {

// Direct survival evaluation, written independently of the library.
double surv(double alpha, double sigma, double phi, double t)
{
    if (t == 0.0) {
        return 1.0;
    }
    const double a = alpha * std::pow(phi, t);
    return a / (a + std::pow(t, 1.0 - sigma));
}

double bernoulli_loglik(double alpha, double sigma, double phi, const DiscoverySequence& d)
{
    double ll = 0.0;
    for (std::size_t i = 2; i <= d.size(); ++i) {
        const double s = surv(alpha, sigma, phi, static_cast<double>(i - 1));
        ll += d[i - 1] ? std::log(s) : std::log1p(-s);
    }
    return ll;
}

// Monte Carlo standard error of a chain mean by non-overlapping batch means.
double batch_means_se(const Eigen::VectorXd& x, int batches = 25)
{
    const Eigen::Index len = x.size() / batches;
    Eigen::VectorXd means(batches);
    for (int b = 0; b < batches; ++b) {
        means(b) = x.segment(b * len, len).mean();
    }
    const double centre = means.mean();
    return std::sqrt((means.array() - centre).square().sum() / (batches - 1) / batches);
}

bool draws_satisfy_sign_constraints(const PosteriorDraws& post)
{
    for (Eigen::Index r = 0; r < post.draws.rows(); ++r) {
        if (post.family != Family::LL1 && !(post.draws(r, 1) < 0.0)) {
            return false;
        }
        if (post.family == Family::LL3 && !(post.draws(r, 2) <= 0.0)) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("log-likelihood hand values")
{
    CHECK(log_likelihood(SurvivalParams::ll1(1.0), DiscoverySequence({1, 1})) ==
          Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(log_likelihood(SurvivalParams::ll1(2.0), DiscoverySequence({1})) == 0.0);
    // D = (1, 0, 1) under alpha = 1: log(1/2) + log(1/3).
    CHECK(log_likelihood(SurvivalParams::ll1(1.0), DiscoverySequence({1, 0, 1})) ==
          Approx(std::log(0.5) + std::log(1.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("indicator likelihood differs from the partition likelihood by a constant")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = indicators_of(simulate_dirichlet(5.0, 400, seed));
        const double k = static_cast<double>(d.discoveries());
        double lo = 1e300;
        double hi = -1e300;
        for (int g = 0; g < 20; ++g) {
            const double alpha = 0.1 * std::pow(1.5, g);
            double ewens = (k - 1.0) * std::log(alpha);
            for (std::size_t i = 2; i <= d.size(); ++i) {
                ewens -= std::log(alpha + static_cast<double>(i) - 1.0);
            }
            const double diff = log_likelihood(SurvivalParams::ll1(alpha), d) - ewens;
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        CHECK(hi - lo < 1e-8);
    }
}

TEST_CASE("log-likelihood matches the per-term oracle")
{
    for (auto [a, s, f] : {std::tuple{30.0, -0.2, 0.999}, std::tuple{3.0, 0.4, 0.95},
                           std::tuple{500.0, -1.5, 0.9999}}) {
        const auto p = SurvivalParams::ll3(a, s, f);
        const auto d = simulate_from_model(p, 3000, 77);
        CHECK(log_likelihood(p, d) == Approx(bernoulli_loglik(a, s, f, d)).epsilon(1e-11));
        CHECK(log_likelihood_beta(p.beta(), d) == Approx(bernoulli_loglik(a, s, f, d)).epsilon(1e-11));
    }
}

TEST_CASE("MLE satisfies the expected-count fixed point")
{
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::vector<std::pair<Family, SurvivalParams>> cases{
            {Family::LL1, SurvivalParams::ll1(20.0)},
            {Family::LL2, SurvivalParams::ll2(10.0, 0.3)},
            {Family::LL3, SurvivalParams::ll3(40.0, -0.1, 0.999)}};
        for (const auto& [fam, truth] : cases) {
            const auto d = simulate_from_model(truth, 2000, seed);
            const auto fit = fit_mle(d, fam);
            CHECK(fit.converged);
            if (fit.constraint_active) {
                continue;
            }
            const auto probs = discovery_probs(fit.params, d.size());
            double total = 0.0;
            for (double v : probs) {
                total += v;
            }
            CHECK(std::abs(total - static_cast<double>(d.discoveries())) < 1e-6);
            ++checked;
        }
    }
    CHECK(checked >= 12);
}

TEST_CASE("MLE recovers a Dirichlet concentration")
{
    const auto d = indicators_of(simulate_dirichlet(30.0, 30000, 3));
    const auto fit = fit_mle(d, Family::LL1);
    CHECK(fit.params.alpha() > 20.0);
    CHECK(fit.params.alpha() < 45.0);
    CHECK(fit.covariance(0, 0) > 0.0);
}

TEST_CASE("MLE diagnostics")
{
    CHECK_THROWS_AS(fit_mle(DiscoverySequence({1, 1, 1}), Family::LL1), NumericalError);
    CHECK_THROWS_AS(fit_mle(DiscoverySequence({1, 0, 0, 0, 0}), Family::LL1), NumericalError);
    CHECK_THROWS_AS(fit_mle(DiscoverySequence({1, 0, 1}), Family::LL3), InputError);
}

TEST_CASE("prior validation")
{
    auto prior = PriorSpec::for_family(Family::LL3);
    CHECK_NOTHROW(prior.validate(3));
    CHECK_THROWS_AS(prior.validate(2), DomainError);
    prior.covariance(0, 1) = 500.0;
    CHECK_THROWS_AS(prior.validate(3), DomainError);
}

TEST_CASE("same seed gives identical chains")
{
    const auto d = simulate_from_model(SurvivalParams::ll3(20.0, 0.0, 0.998), 1500, 1);
    McmcOptions opts;
    opts.iterations = 300;
    opts.burn_in = 100;
    opts.seed = 9;
    opts.chains = 2;
    const auto prior = PriorSpec::for_family(Family::LL3);
    const auto a = run_chains(d, prior, opts);
    const auto b = run_chains(d, prior, opts);
    CHECK(a.size() == 400);
    CHECK(a.draws == b.draws);
    CHECK(a.loglik == b.loglik);
    opts.seed = 10;
    const auto c = run_chains(d, prior, opts);
    CHECK(a.draws != c.draws);
}

TEST_CASE("a concentrated prior dominates the data")
{
    const auto d = simulate_from_model(SurvivalParams::ll3(20.0, 0.0, 0.998), 800, 2);
    auto prior = PriorSpec::for_family(Family::LL3);
    prior.mean << 1.0, -0.5, -0.01;
    prior.covariance = Eigen::MatrixXd::Identity(3, 3) * 1e-10;
    Rng rng(5);
    const auto post = gibbs_single(d, prior, 200, 50, rng);
    const auto m = post.mean();
    CHECK(m(0) == Approx(1.0).epsilon(1e-3));
    CHECK(m(1) == Approx(-0.5).epsilon(1e-3));
    CHECK(m(2) == Approx(-0.01).epsilon(1e-2));
}

TEST_CASE("posterior draws respect sign constraints and recover a Dirichlet alpha")
{
    const auto d = indicators_of(simulate_dirichlet(30.0, 30000, 11));
    for (Family fam : {Family::LL1, Family::LL2, Family::LL3}) {
        McmcOptions opts;
        opts.iterations = 1200;
        opts.burn_in = 400;
        opts.seed = 4;
        const auto post = run_chains(d, PriorSpec::for_family(fam), opts);
        CHECK(post.size() == 800);
        CHECK(draws_satisfy_sign_constraints(post));
        if (fam == Family::LL1) {
            const double alpha = std::exp(post.mean()(0));
            CHECK(alpha > 20.0);
            CHECK(alpha < 45.0);
            CHECK((post.draws.col(1).array() == -1.0).all());
            CHECK((post.draws.col(2).array() == 0.0).all());
        }
        const auto s = dic_summary(post);
        CHECK(std::isfinite(s.dic));
        CHECK(s.dic == Approx(-2.0 * s.loglik_at_mean + 2.0 * s.p_d));
    }
}

TEST_CASE("one intercept-only site reduces to the single-curve sampler")
{
    const auto d = simulate_from_model(SurvivalParams::ll3(50.0, -0.3, 0.999), 400, 6);
    const SiteDataset data({Site{"only", d, {1.0}}});
    McmcOptions opts;
    opts.iterations = 22000;
    opts.burn_in = 2000;
    opts.seed = 2;
    const auto single = run_chains(d, PriorSpec::for_family(Family::LL3), opts);
    const auto multi = run_chains(data, PriorSpec::for_sites(data), opts);
    REQUIRE(multi.draws.cols() == 3);
    const auto ms = single.mean();
    const auto mm = multi.mean();
    for (Eigen::Index j = 0; j < 3; ++j) {
        const double se = std::hypot(batch_means_se(single.draws.col(j)), batch_means_se(multi.draws.col(j)));
        CHECK(std::abs(ms(j) - mm(j)) < 4.0 * se);
    }
    CHECK(log_likelihood_sites(mm, data) == Approx(log_likelihood_beta({mm(0), mm(1), mm(2)}, d)));
}

TEST_CASE("identical sites share their implied coefficients")
{
    const auto d = simulate_from_model(SurvivalParams::ll3(50.0, -0.3, 0.999), 1500, 8);
    const SiteDataset data({Site{"a", d, {1.0, 0.5}}, Site{"b", d, {1.0, 0.5}}});
    McmcOptions opts;
    opts.iterations = 500;
    opts.burn_in = 100;
    const auto post = run_chains(data, PriorSpec::for_sites(data), opts);
    const auto pa = posterior_params(post, data[0].covariates);
    const auto pb = posterior_params(post, data[1].covariates);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i] == pb[i]);
    }
}

TEST_CASE("multi-site posterior covers the generating coefficients")
{
    Eigen::VectorXd gamma(6);
    gamma << 3.0, 0.5, -0.4, 0.1, -4e-4, -2e-4;
    std::vector<Site> sites;
    const std::vector<std::vector<double>> zs{{1.0, 0.1}, {1.0, 0.5}, {1.0, 0.9}};
    for (std::size_t l = 0; l < zs.size(); ++l) {
        const Beta b = site_beta(gamma, zs[l]);
        const auto p = SurvivalParams::from_beta(Family::LL3, b);
        sites.push_back(Site{"s" + std::to_string(l), simulate_from_model(p, 4000, 31, l), zs[l]});
    }
    const SiteDataset data(std::move(sites));
    McmcOptions opts;
    opts.iterations = 2500;
    opts.burn_in = 500;
    opts.seed = 1;
    const auto post = run_chains(data, PriorSpec::for_sites(data), opts);
    const auto m = post.mean();
    for (Eigen::Index j = 0; j < 6; ++j) {
        const double sd = std::sqrt((post.draws.col(j).array() - m(j)).square().mean());
        CHECK(std::abs(m(j) - gamma(j)) < 3.0 * sd);
    }
    for (Eigen::Index r = 0; r < post.draws.rows(); ++r) {
        const Eigen::VectorXd g = post.draws.row(r).transpose();
        for (const auto& s : data.sites()) {
            const Beta b = site_beta(g, s.covariates);
            REQUIRE(b[1] < 0.0);
            REQUIRE(b[2] <= 0.0);
        }
    }
}

TEST_CASE("DIC of degenerate draws has no effective parameters")
{
    PosteriorDraws post;
    post.draws = Eigen::MatrixXd(4, 3);
    for (Eigen::Index r = 0; r < 4; ++r) {
        post.draws.row(r) << 2.0, -0.5, -0.001;
    }
    post.loglik.assign(4, -123.5);
    post.loglik_at_mean = -123.5;
    const auto s = dic_summary(post);
    CHECK(s.p_d == 0.0);
    CHECK(s.dic == Approx(247.0));

    post.loglik.clear();
    CHECK_THROWS_AS(dic(post), DomainError);
}

TEST_CASE("draws CSV round trip")
{
    const auto d = simulate_from_model(SurvivalParams::ll2(20.0, 0.2), 1000, 3);
    McmcOptions opts;
    opts.iterations = 60;
    opts.burn_in = 10;
    const auto post = run_chains(d, PriorSpec::for_family(Family::LL2), opts);
    const auto path = std::filesystem::temp_directory_path() / "accum_test_draws.csv";
    write_draws_csv(path, post);
    const auto back = read_draws_csv(path, Family::LL2);
    CHECK(back.draws == post.draws);
    CHECK(back.loglik == post.loglik);
    CHECK(back.column_names() == std::vector<std::string>{"beta0", "beta1", "beta2"});
}
