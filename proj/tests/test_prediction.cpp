#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "accum/error.hpp"
#include "accum/prediction.hpp"
#include "accum/rng.hpp"
#include "accum/simulators.hpp"

using namespace accum;
using doctest::Approx;

namespace {

double surv(double alpha, double sigma, double phi, double t)
{
    if (t == 0.0) {
        return 1.0;
    }
    const double a = alpha * std::pow(phi, t);
    return a / (a + std::pow(t, 1.0 - sigma));
}

// E(K_{n+m}) / E(K_inf) >= target by forward summation, one step at a time.
std::size_t linear_scan_required_m(double alpha, double sigma, double phi, std::size_t n,
                                   std::size_t k, double total, double target)
{
    double expected = static_cast<double>(k);
    std::size_t m = 0;
    while (expected / total < target) {
        expected += surv(alpha, sigma, phi, static_cast<double>(n + m));
        ++m;
    }
    return m;
}

} // namespace

TEST_CASE("rarefaction hand values")
{
    const auto r = rarefaction(SurvivalParams::ll1(1.0), 3);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == Approx(1.5));
    CHECK(r[2] == Approx(11.0 / 6.0));
    CHECK(rarefaction(SurvivalParams::ll3(2.0, 0.1, 0.5), 1) == std::vector<double>{1.0});
    CHECK_THROWS_AS(rarefaction(SurvivalParams::ll1(1.0), 0), DomainError);
}

TEST_CASE("rarefaction matches direct summation")
{
    const auto r = rarefaction(SurvivalParams::ll1(30.0), 30000);
    double sum = 0.0;
    for (std::size_t i = 1; i <= 30000; ++i) {
        sum += 30.0 / (30.0 + static_cast<double>(i) - 1.0);
        if (i % 997 == 0 || i == 30000) {
            CHECK(std::abs(r[i - 1] - sum) < 1e-10);
        }
    }
}

TEST_CASE("extrapolation hand values")
{
    const auto e = extrapolate(SurvivalParams::ll1(1.0), 2, 2, 1);
    CHECK(e.mean == Approx(2.0 + 1.0 / 3.0));
    REQUIRE(e.distribution.has_value());
    CHECK(e.distribution->probability(1) == Approx(1.0 / 3.0));

    const double alpha = 7.5;
    const std::size_t n = 400;
    const std::size_t m = 250;
    double inc = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        inc += alpha / (alpha + static_cast<double>(n + i) - 1.0);
    }
    CHECK(extrapolate(SurvivalParams::ll1(alpha), n, 30, m).mean == Approx(30.0 + inc).epsilon(1e-13));

    CHECK_THROWS_AS(extrapolate(SurvivalParams::ll1(1.0), 2, 2, 0), DomainError);
    CHECK_THROWS_AS(extrapolate(SurvivalParams::ll1(1.0), 2, 3, 1), DomainError);
    CHECK_THROWS_AS(extrapolate(SurvivalParams::ll1(1.0), 2, 2, 1, 1.0), DomainError);
}

TEST_CASE("extrapolation agrees with rarefaction and ignores order")
{
    const auto p = SurvivalParams::ll3(80.0, -0.1, 0.9995);
    const auto d = simulate_from_model(p, 1000, 5);
    const auto r = rarefaction(p, 1700);
    const std::size_t k = d.discoveries();
    const auto e = extrapolate(p, 1000, k, 700);
    CHECK(e.mean == Approx(r[1699] - r[999] + static_cast<double>(k)).epsilon(1e-12));

    // Permutations of D_2..D_n keep n and k and therefore every prediction.
    std::vector<std::uint8_t> v(d.indicators().begin(), d.indicators().end());
    Rng rng(3);
    for (std::size_t i = v.size() - 1; i > 1; --i) {
        std::swap(v[i], v[1 + rng.index(i)]);
    }
    const DiscoverySequence shuffled(v);
    REQUIRE(shuffled.discoveries() == k);
    const auto e2 = extrapolate(p, shuffled.size(), shuffled.discoveries(), 700);
    CHECK(e2.mean == e.mean);
    CHECK(e2.lower == e.lower);
    CHECK(e2.upper == e.upper);
}

TEST_CASE("band from a single parameter converges to exact quantiles")
{
    const auto p = SurvivalParams::ll3(60.0, 0.0, 0.999);
    const std::vector<SurvivalParams> draws(5, p);
    const std::vector<std::size_t> horizons{1000, 100, 400};
    BandOptions opts;
    opts.sims_per_draw = 20000;
    opts.seed = 3;
    const auto band = predictive_band(draws, 2000, 150, horizons, 0.95, opts);
    REQUIRE(band.size() == 3);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        CHECK(band[h].horizon == horizons[h]);
        const auto exact = extrapolate(p, 2000, 150, horizons[h]);
        CHECK(std::abs(band[h].lower - exact.lower) <= 1.0);
        CHECK(std::abs(band[h].upper - exact.upper) <= 1.0);
        CHECK(band[h].mean == Approx(exact.mean).epsilon(5e-3));
    }
}

TEST_CASE("band widths grow with the horizon")
{
    std::vector<SurvivalParams> draws;
    for (int i = 0; i < 20; ++i) {
        draws.push_back(SurvivalParams::ll3(40.0 + i, -0.1 + 0.01 * i, 0.9995));
    }
    const std::vector<std::size_t> horizons{10, 100, 500, 1000, 3000};
    BandOptions opts;
    opts.sims_per_draw = 500;
    const auto band = predictive_band(draws, 3000, 200, horizons, 0.95, opts);
    for (std::size_t h = 1; h < band.size(); ++h) {
        CHECK(band[h].upper - band[h].lower >= band[h - 1].upper - band[h - 1].lower);
        CHECK(band[h].mean >= band[h - 1].mean);
    }
    CHECK_THROWS_AS(predictive_band({}, 3000, 200, horizons), DomainError);
}

TEST_CASE("richness regimes")
{
    const auto inf = richness(SurvivalParams::ll1(30.0), 1000, 120);
    CHECK(inf.infinite);
    CHECK_FALSE(inf.explanation.empty());
    CHECK(std::isinf(inf.richness));
    CHECK_THROWS_AS(saturation(SurvivalParams::ll1(30.0), 1000, 120), RegimeError);
    CHECK_THROWS_AS(required_m(SurvivalParams::ll1(30.0), 1000, 120, 0.9), RegimeError);

    // Prior case: sum_{i>=0} 1 / (1 + i^2).
    const auto prior = richness(SurvivalParams::ll2(1.0, -1.0), 0, 0);
    CHECK_FALSE(prior.infinite);
    const double exact = 0.5 + 0.5 * M_PI / std::tanh(M_PI);
    CHECK(prior.richness == Approx(exact).epsilon(1e-9));
    CHECK(prior.richness >= M_PI / 2.0);
    CHECK(prior.richness <= M_PI / 2.0 + 1.0);
}

TEST_CASE("richness lies between its bounds")
{
    Rng rng(19);
    for (int rep = 0; rep < 40; ++rep) {
        const double alpha = std::exp(rng.uniform() * 8.0);
        const double sigma = -2.0 * rng.uniform();
        const double phi = rng.bernoulli(0.5) ? 1.0 : 1.0 - std::pow(10.0, -1.0 - 3.0 * rng.uniform());
        const auto p = sigma < 0.0 || phi < 1.0 ? SurvivalParams::ll3(alpha, sigma, phi)
                                                : SurvivalParams::ll3(alpha, -0.5, phi);
        const std::size_t n = rng.index(5000);
        const std::size_t k = n == 0 ? 0 : 1 + rng.index(n);
        const auto r = richness(p, n, k);
        REQUIRE_FALSE(r.infinite);
        CHECK(r.richness >= r.lower - 1e-8);
        CHECK(r.richness <= r.upper + 1e-8);
        CHECK(std::abs(r.approx - r.richness) <= 0.5 + 1e-8);
        if (k > 0) {
            CHECK(*r.saturation > 0.0);
            CHECK(*r.saturation <= 1.0);
        }
    }
}

TEST_CASE("saturation")
{
    // The unseen mass does not depend on k, so saturation is k / (k + tail).
    const auto p = SurvivalParams::ll3(500.0, 0.3, 0.9999);
    const std::size_t n = 2000;
    const double tail = richness(p, n, 800).richness - 800.0;
    CHECK(richness(p, n, 400).richness - 400.0 == Approx(tail).epsilon(1e-12));
    CHECK(saturation(p, n, 800) == Approx(800.0 / (800.0 + tail)).epsilon(1e-12));
    CHECK(saturation(p, n, 400) == Approx(400.0 / (400.0 + tail)).epsilon(1e-12));
    // With the unseen mass dominating, halving k halves the saturation.
    const auto heavy = SurvivalParams::ll2(1e4, -0.05);
    CHECK(saturation(heavy, 10, 2) == Approx(saturation(heavy, 10, 4) / 2.0).epsilon(1e-4));
    // Negligible remaining mass.
    CHECK(saturation(SurvivalParams::ll3(1.0, -1.0, 0.5), 1000, 50) == Approx(1.0).epsilon(1e-12));

    const std::vector<SurvivalParams> two{p, SurvivalParams::ll3(600.0, 0.3, 0.9999)};
    const auto r = richness(two, n, 800);
    REQUIRE(r.draws_summary.has_value());
    CHECK(r.draws_summary->count == 2);
    CHECK(*r.saturation == Approx(saturation(two, n, 800)));
    CHECK(*r.saturation <= 1.0);
}

TEST_CASE("required sample size matches a forward scan")
{
    struct Case {
        double alpha, sigma, phi;
        std::size_t n, k;
    };
    for (const Case c : {Case{100.0, -0.2, 0.999, 10000, 700}, Case{100.0, -0.2, 0.999, 500, 300},
                         Case{500.0, 0.3, 0.9999, 2000, 800}}) {
        const auto p = SurvivalParams::ll3(c.alpha, c.sigma, c.phi);
        const double total = richness(p, c.n, c.k).richness;
        const double current = static_cast<double>(c.k) / total;
        std::size_t previous = 0;
        for (double target : {0.5, 0.9, 0.99, 0.995, 0.999}) {
            const auto m = required_m(p, c.n, c.k, target);
            CHECK(m == linear_scan_required_m(c.alpha, c.sigma, c.phi, c.n, c.k, total, target));
            CHECK(m >= previous);
            if (target > current) {
                CHECK(m > 0);
            }
            previous = m;
        }
        CHECK(required_m(p, c.n, c.k, current) == 0);
        CHECK_THROWS_AS(required_m(p, c.n, c.k, 1.0), DomainError);
    }
}
