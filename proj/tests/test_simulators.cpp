#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "accum/error.hpp"
#include "accum/simulators.hpp"

using namespace accum;
using doctest::Approx;

namespace {

std::size_t distinct(const TagSequence& t)
{
    return std::set<std::uint32_t>(t.begin(), t.end()).size();
}

struct Summary {
    double mean;
    double se;
};

template <class F>
Summary replicate(std::size_t reps, F&& draw)
{
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        const double x = draw(r);
        s += x;
        s2 += x * x;
    }
    const double m = s / static_cast<double>(reps);
    const double var = (s2 - static_cast<double>(reps) * m * m) / static_cast<double>(reps - 1);
    return {m, std::sqrt(var / static_cast<double>(reps))};
}

double dirichlet_expected(double alpha, std::size_t n)
{
    double e = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        e += alpha / (alpha + static_cast<double>(i) - 1.0);
    }
    return e;
}

bool first_appearance_labels(const TagSequence& t)
{
    std::uint32_t next = 1;
    for (auto v : t) {
        if (v == next) {
            ++next;
        } else if (v > next || v == 0) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("Dirichlet edge cases")
{
    const auto one = simulate_dirichlet(2.0, 1, 5);
    CHECK(one == TagSequence{1});
    CHECK(distinct(simulate_dirichlet(1e9, 100, 1)) == 100);
    CHECK(first_appearance_labels(simulate_dirichlet(3.0, 5000, 2)));
}

TEST_CASE("Dirichlet distinct count matches its expectation")
{
    const std::size_t n = 90000;
    const auto s = replicate(200, [&](std::size_t r) {
        return static_cast<double>(distinct(simulate_dirichlet(30.0, n, 100, r)));
    });
    CHECK(std::abs(s.mean - dirichlet_expected(30.0, n)) < 3.0 * s.se);
}

TEST_CASE("Pitman-Yor with zero discount matches Dirichlet")
{
    const std::size_t n = 3000;
    const auto py = replicate(400, [&](std::size_t r) {
        return static_cast<double>(distinct(simulate_pitman_yor(10.0, 0.0, n, 7, r)));
    });
    const auto dp = replicate(400, [&](std::size_t r) {
        return static_cast<double>(distinct(simulate_dirichlet(10.0, n, 8, r)));
    });
    CHECK(std::abs(py.mean - dp.mean) < 3.0 * std::hypot(py.se, dp.se));
    CHECK(std::abs(py.mean - dirichlet_expected(10.0, n)) < 3.0 * py.se);
}

TEST_CASE("Pitman-Yor predictive weights form a distribution")
{
    const auto tags = simulate_pitman_yor(30.0, 0.25, 1000, 4);
    std::map<std::uint32_t, std::size_t> counts;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        std::vector<std::size_t> c;
        for (const auto& [label, cnt] : counts) {
            c.push_back(cnt);
        }
        const auto w = pitman_yor_weights(30.0, 0.25, c);
        REQUIRE(w.size() == c.size() + 1);
        REQUIRE(std::accumulate(w.begin(), w.end(), 0.0) == Approx(1.0).epsilon(1e-12));
        for (double v : w) {
            REQUIRE(v >= 0.0);
        }
        ++counts[tags[i]];
    }
    // Growth exponent sigma: many more distinct tags than under Dirichlet.
    CHECK(distinct(simulate_pitman_yor(30.0, 0.25, 90000, 1)) > 1.5 * dirichlet_expected(30.0, 90000));
}

TEST_CASE("Pitman-Yor parameter checks")
{
    CHECK_THROWS_AS(simulate_pitman_yor(1.0, 1.0, 10, 0), DomainError);
    CHECK_THROWS_AS(simulate_pitman_yor(1.0, -0.1, 10, 0), DomainError);
    CHECK_THROWS_AS(simulate_pitman_yor(-0.5, 0.25, 10, 0), DomainError);
}

TEST_CASE("Dirichlet-multinomial never exceeds H")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t = simulate_dirichlet_multinomial(-0.25, 5000, 90000, seed);
        CHECK(distinct(t) <= 5000);
    }
    const auto single = simulate_dirichlet_multinomial(-0.5, 1, 200, 3);
    CHECK(distinct(single) == 1);
    const auto w = pitman_yor_weights(3 * 0.5, -0.5, {4, 2, 1});
    CHECK(w[0] == 0.0);
    CHECK_THROWS_AS(simulate_dirichlet_multinomial(0.25, 10, 10, 0), DomainError);
}

TEST_CASE("Zipf generator")
{
    const auto one = simulate_zipf(1, 0.3, 500, 2);
    CHECK(distinct(one) == 1);

    // Each of the rarest species is missed with probability about exp(-4), so
    // a few dozen of the 5000 typically remain unseen after 30000 draws.
    const auto t = simulate_zipf(5000, 0.3, 30000, 9);
    CHECK(distinct(t) <= 5000);
    CHECK(distinct(t) >= 4950);

    // Labels are relabelled by first appearance, so count species identity via
    // a small support where the most frequent tags dominate.
    const auto big = simulate_zipf(2, 0.3, 1000000, 4);
    std::map<std::uint32_t, double> freq;
    for (auto v : big) {
        freq[v] += 1.0;
    }
    REQUIRE(freq.size() == 2);
    const double hi = std::max(freq[1], freq[2]);
    const double lo = std::min(freq[1], freq[2]);
    const double p1 = 1.0 / (1.0 + std::pow(2.0, -0.3));
    const double se_ratio = std::sqrt(p1 * (1.0 - p1) / 1e6) / std::pow(1.0 - p1, 2);
    CHECK(std::abs(hi / lo - std::pow(2.0, 0.3)) < 4.0 * se_ratio);
    CHECK_THROWS_AS(simulate_zipf(10, 0.0, 10, 0), DomainError);
}

TEST_CASE("model-based indicators")
{
    for (std::uint64_t s = 0; s < 20; ++s) {
        CHECK(simulate_from_model(SurvivalParams::ll3(0.01, -3.0, 0.1), 50, s)[0] == 1);
    }
    const auto k2 = replicate(20000, [](std::size_t r) {
        return static_cast<double>(simulate_from_model(SurvivalParams::ll1(1.0), 2, 6, r).discoveries());
    });
    CHECK(std::abs(k2.mean - 1.5) < 3.0 * k2.se);

    const auto p = SurvivalParams::ll3(50.0, 0.0, 0.9);
    const auto probs = discovery_probs(p, 2000);
    const double expect = std::accumulate(probs.begin(), probs.end(), 0.0);
    const auto kn = replicate(2000, [&](std::size_t r) {
        return static_cast<double>(simulate_from_model(p, 2000, 12, r).discoveries());
    });
    CHECK(std::abs(kn.mean - expect) < 3.0 * kn.se);
}

TEST_CASE("generator specs are validated and deterministic")
{
    GeneratorSpec spec;
    spec.kind = GeneratorKind::Dirichlet;
    spec.n = 100;
    CHECK_THROWS_AS(spec.validate(), InputError);
    spec.alpha = -1.0;
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec.alpha = 4.0;
    spec.seed = 12;
    CHECK(generate(spec) == generate(spec));
    CHECK(generate(spec) == simulate_dirichlet(4.0, 100, 12));

    GeneratorSpec model;
    model.kind = GeneratorKind::SurvivalModel;
    model.params = SurvivalParams::ll2(5.0, 0.2);
    model.n = 500;
    model.seed = 3;
    const auto tags = generate(model);
    CHECK(indicators_of(tags) == simulate_from_model(*model.params, 500, 3));
    CHECK(generate(model) == tags);

    CHECK(generator_kind_from_string("py") == GeneratorKind::PitmanYor);
    CHECK_THROWS(generator_kind_from_string("bogus"));
    CHECK(render_tags({1, 2, 1}) == std::vector<std::string>{"1", "2", "1"});
}
